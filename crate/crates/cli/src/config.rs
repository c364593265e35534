//! Experiment description in a flat `key = value` format with `[section]`
//! headers and `#` comments.
//!
//! ```text
//! [mesh]
//! structured = 16          # or: file = square.mesh
//! [problem]
//! name = stereo-perturbed
//! [scheme]
//! kind = midpoint          # euler | midpoint | modified-euler | theta-mu | bdf2
//! metric = h1
//! step = constant          # constant | growth | adaptive
//! tau = 2^-4
//! [stop]
//! tolerance = 1e-6         # or: final_time = 1
//! [sweep]
//! taus = 2^-4, 2^-5, 2^-6
//! [output]
//! dir = out
//! save_fields = false
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hmflow::fem::Metric;
use hmflow::{Problem, SchemeConfig64, SchemeKind, StepPolicy, StopRule};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Structured(usize),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mesh: MeshSource,
    pub problem: Problem,
    pub scheme: SchemeConfig64,
    /// Step sizes of the sweep, strictly decreasing. A single entry when no
    /// sweep is given.
    pub taus: Vec<f64>,
    pub output_dir: Option<PathBuf>,
    pub save_fields: bool,
}

/// Parses `2^-4`, `inf` and plain floats.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = if let Some((base, exp)) = s.split_once('^') {
        let b: f64 = base.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
        let e: f64 = exp.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
        if e.fract() == 0.0 && e.abs() < 1024.0 {
            b.powi(e as i32)
        } else {
            b.powf(e)
        }
    } else {
        match s {
            "inf" | "infinity" => f64::INFINITY,
            _ => s.parse().map_err(|_| format!("bad number `{s}`"))?,
        }
    };
    if value.is_nan() {
        return Err(format!("bad number `{s}`"));
    }
    Ok(value)
}

type Sections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn parse_sections(text: &str) -> Result<Sections, CliError> {
    let mut sections = Sections::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| CliError::config(format!("line {line_no}: unterminated section header")))?
                .trim()
                .to_string();
            if sections.contains_key(&name) {
                return Err(CliError::config(format!("line {line_no}: duplicate section [{name}]")));
            }
            sections.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {line_no}: expected `key = value`")))?;
        let section = current
            .as_ref()
            .ok_or_else(|| CliError::config(format!("line {line_no}: key outside of a section")))?;
        let entries = sections.get_mut(section).expect("section inserted");
        let key = key.trim().to_string();
        if entries.contains_key(&key) {
            return Err(CliError::config(format!("line {line_no}: duplicate key `{key}`")));
        }
        entries.insert(key, (line_no, value.trim().to_string()));
    }
    Ok(sections)
}

struct Section<'a> {
    name: &'a str,
    entries: BTreeMap<String, (usize, String)>,
}

impl<'a> Section<'a> {
    fn take(sections: &mut Sections, name: &'a str) -> Self {
        Self {
            name,
            entries: sections.remove(name).unwrap_or_default(),
        }
    }

    fn str(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<(usize, String), CliError> {
        self.str(key)
            .ok_or_else(|| CliError::config(format!("[{}] is missing `{key}`", self.name)))
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        self.str(key)
            .map(|(line, v)| parse_number(&v).map_err(|e| CliError::config(format!("line {line}: {e}"))))
            .transpose()
    }

    fn required_number(&mut self, key: &str) -> Result<f64, CliError> {
        self.number(key)?
            .ok_or_else(|| CliError::config(format!("[{}] is missing `{key}`", self.name)))
    }

    fn finish(self) -> Result<(), CliError> {
        match self.entries.iter().next() {
            Some((key, (line, _))) => Err(CliError::config(format!("line {line}: unknown key `{key}` in [{}]", self.name))),
            None => Ok(()),
        }
    }
}

fn parse_usize(line: usize, v: &str) -> Result<usize, CliError> {
    v.parse()
        .map_err(|_| CliError::config(format!("line {line}: expected a nonnegative integer, got `{v}`")))
}

fn parse_bool(line: usize, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::config(format!("line {line}: expected true or false, got `{v}`"))),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses `text`; relative mesh paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut sections = parse_sections(text)?;

        let mut mesh = Section::take(&mut sections, "mesh");
        let mesh_source = match (mesh.str("structured"), mesh.str("file")) {
            (Some((line, n)), None) => {
                let n = parse_usize(line, &n)?;
                if n == 0 {
                    return Err(CliError::config(format!("line {line}: structured mesh needs n >= 1")));
                }
                MeshSource::Structured(n)
            }
            (None, Some((line, f))) => {
                let p = base_dir.join(f);
                if !p.is_file() {
                    return Err(CliError::config(format!("line {line}: mesh file {} does not exist", p.display())));
                }
                MeshSource::File(std::fs::canonicalize(&p).map_err(|e| CliError::io(&p, e))?)
            }
            _ => return Err(CliError::config("[mesh] needs exactly one of `structured` or `file`")),
        };
        mesh.finish()?;

        let mut problem = Section::take(&mut sections, "problem");
        let (line, name) = problem.required("name")?;
        let problem_kind: Problem = name.parse().map_err(|e| CliError::config(format!("line {line}: {e}")))?;
        problem.finish()?;

        let mut scheme = Section::take(&mut sections, "scheme");
        let (line, kind_name) = scheme.required("kind")?;
        let theta = scheme.number("theta")?;
        let mu = scheme.number("mu")?;
        let kind = match kind_name.as_str() {
            "euler" => SchemeKind::Euler,
            "midpoint" => SchemeKind::midpoint(),
            "modified-euler" => SchemeKind::modified_euler(),
            "bdf2" => SchemeKind::Bdf2,
            "theta-mu" => match (theta, mu) {
                (Some(theta), Some(mu)) => SchemeKind::ThetaMu { theta, mu },
                _ => return Err(CliError::config(format!("line {line}: theta-mu needs `theta` and `mu`"))),
            },
            other => return Err(CliError::config(format!("line {line}: unknown scheme kind `{other}`"))),
        };
        if kind_name != "theta-mu" && (theta.is_some() || mu.is_some()) {
            return Err(CliError::config(format!("line {line}: `theta`/`mu` only apply to kind = theta-mu")));
        }
        let metric = match scheme.str("metric") {
            Some((line, m)) => m.parse::<Metric>().map_err(|e| CliError::config(format!("line {line}: {e}")))?,
            None => Metric::H1,
        };
        let tau = scheme.required_number("tau")?;
        let step = scheme.str("step").unwrap_or((line, "constant".into()));
        let growth_c = scheme.number("growth_c")?;
        let tau_min = scheme.number("tau_min")?;
        let tau_max = scheme.number("tau_max")?;
        let policy = match step.1.as_str() {
            "constant" => StepPolicy::Constant { tau },
            "growth" => StepPolicy::PrescribedGrowth {
                tau1: tau,
                c: growth_c.unwrap_or(1.0),
            },
            "adaptive" => match (tau_min, tau_max) {
                (Some(tau_min), Some(tau_max)) => StepPolicy::Adaptive {
                    tau1: tau,
                    tau_min,
                    tau_max,
                },
                _ => return Err(CliError::config(format!("line {}: adaptive steps need `tau_min` and `tau_max`", step.0))),
            },
            other => return Err(CliError::config(format!("line {}: unknown step policy `{other}`", step.0))),
        };
        if step.1 != "growth" && growth_c.is_some() {
            return Err(CliError::config("`growth_c` only applies to step = growth"));
        }
        if step.1 != "adaptive" && (tau_min.is_some() || tau_max.is_some()) {
            return Err(CliError::config("`tau_min`/`tau_max` only apply to step = adaptive"));
        }
        scheme.finish()?;

        let mut stop = Section::take(&mut sections, "stop");
        let rule = match (stop.number("tolerance")?, stop.number("final_time")?) {
            (Some(eps), None) => StopRule::Tolerance(eps),
            (None, Some(t)) => StopRule::FinalTime(t),
            _ => return Err(CliError::config("[stop] needs exactly one of `tolerance` or `final_time`")),
        };
        let max_steps = match stop.str("max_steps") {
            Some((line, v)) => parse_usize(line, &v)?,
            None => SchemeConfig64::DEFAULT_MAX_STEPS,
        };
        stop.finish()?;

        let mut sweep = Section::take(&mut sections, "sweep");
        let taus = match sweep.str("taus") {
            Some((line, list)) => {
                let taus = list
                    .split(',')
                    .map(parse_number)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::config(format!("line {line}: {e}")))?;
                if taus.is_empty() || taus.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(CliError::config(format!("line {line}: sweep step sizes must be strictly decreasing")));
                }
                taus
            }
            None => vec![tau],
        };
        sweep.finish()?;

        let mut output = Section::take(&mut sections, "output");
        let output_dir = output.str("dir").map(|(_, d)| PathBuf::from(d));
        let save_fields = match output.str("save_fields") {
            Some((line, v)) => parse_bool(line, &v)?,
            None => false,
        };
        output.finish()?;

        if let Some(name) = sections.keys().next() {
            return Err(CliError::config(format!("unknown section [{name}]")));
        }

        let mut scheme_config = SchemeConfig64::new(kind, metric, policy, rule);
        scheme_config.max_steps = max_steps;
        let cfg = Self {
            mesh: mesh_source,
            problem: problem_kind,
            scheme: scheme_config,
            taus,
            output_dir,
            save_fields,
        };
        for c in cfg.run_configs() {
            c.validate().map_err(|e| CliError::config(e.to_string()))?;
        }
        Ok(cfg)
    }

    /// One scheme configuration per sweep entry.
    pub fn run_configs(&self) -> Vec<SchemeConfig64> {
        self.taus
            .iter()
            .map(|&tau| {
                let mut c = self.scheme.clone();
                c.step_policy = c.step_policy.with_initial_step(tau);
                c
            })
            .collect()
    }

    /// Canonical text form; parsing it again yields the same configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let num = |x: f64| format!("{x:e}");
        s.push_str("[mesh]\n");
        match &self.mesh {
            MeshSource::Structured(n) => writeln!(s, "structured = {n}").unwrap(),
            MeshSource::File(p) => writeln!(s, "file = {}", p.display()).unwrap(),
        }
        writeln!(s, "\n[problem]\nname = {}", self.problem).unwrap();
        s.push_str("\n[scheme]\n");
        match self.scheme.kind {
            SchemeKind::ThetaMu { theta, mu } if !matches!(self.scheme.kind.label().as_str(), "midpoint" | "modified-euler") => {
                writeln!(s, "kind = theta-mu\ntheta = {}\nmu = {}", num(theta), num(mu)).unwrap()
            }
            k => writeln!(s, "kind = {}", k.label()).unwrap(),
        }
        writeln!(s, "metric = {}", self.scheme.metric).unwrap();
        match self.scheme.step_policy {
            StepPolicy::Constant { tau } => writeln!(s, "step = constant\ntau = {}", num(tau)).unwrap(),
            StepPolicy::PrescribedGrowth { tau1, c } => {
                writeln!(s, "step = growth\ntau = {}\ngrowth_c = {}", num(tau1), num(c)).unwrap()
            }
            StepPolicy::Adaptive { tau1, tau_min, tau_max } => writeln!(
                s,
                "step = adaptive\ntau = {}\ntau_min = {}\ntau_max = {}",
                num(tau1),
                num(tau_min),
                num(tau_max)
            )
            .unwrap(),
        }
        s.push_str("\n[stop]\n");
        match self.scheme.stop {
            StopRule::Tolerance(eps) if eps.is_infinite() => s.push_str("tolerance = inf\n"),
            StopRule::Tolerance(eps) => writeln!(s, "tolerance = {}", num(eps)).unwrap(),
            StopRule::FinalTime(t) => writeln!(s, "final_time = {}", num(t)).unwrap(),
        }
        writeln!(s, "max_steps = {}", self.scheme.max_steps).unwrap();
        let taus: Vec<String> = self.taus.iter().map(|&t| num(t)).collect();
        writeln!(s, "\n[sweep]\ntaus = {}", taus.join(", ")).unwrap();
        s.push_str("\n[output]\n");
        if let Some(d) = &self.output_dir {
            writeln!(s, "dir = {}", d.display()).unwrap();
        }
        writeln!(s, "save_fields = {}", self.save_fields).unwrap();
        s
    }
}
