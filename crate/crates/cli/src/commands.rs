use std::fs;
use std::path::{Path, PathBuf};

use hmflow::diagnostics::{fill_eoc, IdentityReport, IdentityTracker, RunSummary};
use hmflow::schemes::run_flow_with;
use hmflow::{Discretization64, Field64, Mesh64, SchemeConfig64, StepRecord64};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, MeshSource};
use crate::output;
use crate::CliError;

pub const CONFIG_FILE: &str = "config.txt";

/// Everything produced by one run of a sweep.
#[derive(Debug)]
pub struct RunOutcome {
    pub tau: f64,
    pub records: Vec<StepRecord64>,
    pub identities: IdentityReport,
    /// Contents of the fields file, when requested.
    pub fields: Option<String>,
    pub summary: Result<RunSummary, CliError>,
}

pub fn discretization(source: &MeshSource) -> Result<Discretization64, CliError> {
    let mesh = match source {
        MeshSource::Structured(n) => Mesh64::structured(*n)?,
        MeshSource::File(p) => Mesh64::load(p)?,
    };
    Ok(Discretization64::new(mesh)?)
}

fn initial_value(cfg: &ExperimentConfig, disc: &Discretization64) -> Result<Field64, CliError> {
    Ok(disc.interpolate(|x| cfg.problem.initial_value(x))?)
}

fn execute_run(
    cfg: &ExperimentConfig,
    scheme: &SchemeConfig64,
    disc: &Discretization64,
    u0: &Field64,
) -> RunOutcome {
    let tau = scheme.step_policy.initial_step();
    let mut tracker = IdentityTracker::new(&scheme.kind, scheme.metric, disc.ops(), u0);
    let mut fields = cfg.save_fields.then(|| output::fields_header(u0.len()));
    let result = run_flow_with(scheme, u0, disc, |rec, state| {
        if rec.n > 0 {
            tracker.push(&state.current, rec.tau);
            tracker.check_ratio_term(rec.ratio_term);
        }
        if let Some(text) = fields.as_mut() {
            output::append_fields(text, rec.n, rec.tau, &state.current);
        }
    });
    let identities = tracker.finish();
    match result {
        Ok(r) => RunOutcome {
            tau,
            summary: Ok(RunSummary::from_result(&r, cfg.problem.reference_energy())),
            records: r.records,
            identities,
            fields,
        },
        Err(e) => RunOutcome {
            tau,
            records: e.records,
            identities,
            fields,
            summary: Err(CliError::Solver { tau, source: e.error }),
        },
    }
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))
}

/// Runs every sweep entry (in parallel on `threads` workers) and returns the
/// outcomes in sweep order.
pub fn execute_sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<RunOutcome>, CliError> {
    let disc = discretization(&cfg.mesh)?;
    let u0 = initial_value(cfg, &disc)?;
    let runs = cfg.run_configs();
    let pool = thread_pool(threads)?;
    Ok(pool.install(|| runs.par_iter().map(|s| execute_run(cfg, s, &disc, &u0)).collect()))
}

/// Summaries in sweep order with rates filled in, or the first failure.
fn summaries(outcomes: &mut [RunOutcome]) -> Result<Vec<RunSummary>, CliError> {
    let mut rows = Vec::with_capacity(outcomes.len());
    for o in outcomes.iter_mut() {
        let s = std::mem::replace(&mut o.summary, Err(CliError::config("summary taken")));
        rows.push(s?);
    }
    fill_eoc(&mut rows);
    Ok(rows)
}

fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

/// File-name suffix of sweep entry `k`; empty for single runs.
fn tag(cfg: &ExperimentConfig, k: usize) -> String {
    if cfg.taus.len() == 1 {
        String::new()
    } else {
        format!("_{k}")
    }
}

/// `run`: per-run trajectories and identity reports (and fields when
/// requested), one summary row per sweep entry, and a copy of the
/// configuration. Returns the output directory.
pub fn cmd_run(cfg: &ExperimentConfig, out: Option<&Path>, threads: Option<usize>, force: bool) -> Result<PathBuf, CliError> {
    let dir = output_dir(cfg, out);
    let mut outcomes = execute_sweep(cfg, threads)?;
    output::write_file(&dir.join(CONFIG_FILE), &cfg.to_text(), force)?;
    for (k, o) in outcomes.iter().enumerate() {
        let t = tag(cfg, k);
        output::write_file(&dir.join(format!("trajectory{t}.csv")), &output::trajectory_csv(&o.records), force)?;
        output::write_file(&dir.join(format!("identities{t}.csv")), &o.identities.to_csv(), force)?;
        if let Some(f) = &o.fields {
            output::write_file(&dir.join(format!("fields{t}.txt")), f, force)?;
        }
    }
    let rows = summaries(&mut outcomes)?;
    let flagged: Vec<(RunSummary, bool)> = rows
        .into_iter()
        .zip(&outcomes)
        .map(|(r, o)| (r, o.identities.all_passed()))
        .collect();
    output::write_file(&dir.join("summary.csv"), &output::summary_csv(&flagged), force)?;
    Ok(dir)
}

/// `table`: one row per step size.
pub fn cmd_table(cfg: &ExperimentConfig, out: Option<&Path>, threads: Option<usize>, force: bool) -> Result<PathBuf, CliError> {
    let dir = output_dir(cfg, out);
    let mut outcomes = execute_sweep(cfg, threads)?;
    let rows = summaries(&mut outcomes)?;
    let csv = output::table_csv(
        &cfg.scheme.kind,
        &cfg.scheme.stop,
        cfg.problem.reference_energy().is_some(),
        !cfg.scheme.step_policy.is_constant(),
        &rows,
    );
    let path = dir.join("table.csv");
    output::write_file(&path, &csv, force)?;
    Ok(path)
}

pub fn cmd_meshgen(n: usize, path: &Path, force: bool) -> Result<(), CliError> {
    let mesh = Mesh64::structured(n)?;
    output::write_file(path, &mesh.to_text(), force)
}

/// `verify`: recomputes every identity from the stored fields of a `run`
/// directory (written with `save_fields = true`) and writes
/// `verify{tag}.csv` next to them.
pub fn cmd_verify(dir: &Path, config: Option<&Path>) -> Result<Vec<(PathBuf, IdentityReport)>, CliError> {
    let cfg_path = config.map(Path::to_path_buf).unwrap_or_else(|| dir.join(CONFIG_FILE));
    let cfg = ExperimentConfig::load(&cfg_path)?;
    let disc = discretization(&cfg.mesh)?;
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for k in 0..cfg.taus.len() {
        let t = tag(&cfg, k);
        let fields_path = dir.join(format!("fields{t}.txt"));
        if !fields_path.is_file() {
            return Err(CliError::config(format!(
                "{} not found (run with save_fields = true)",
                fields_path.display()
            )));
        }
        let text = fs::read_to_string(&fields_path).map_err(|e| CliError::io(&fields_path, e))?;
        let (fields, taus) = output::parse_fields(&text)?;
        if fields[0].len() != disc.num_vertices() {
            return Err(CliError::config(format!("{} does not match the mesh", fields_path.display())));
        }
        let logged = match fs::read_to_string(dir.join(format!("trajectory{t}.csv"))) {
            Ok(csv) => Some(output::trajectory_column(&csv, "ratio_term")?),
            Err(_) => None,
        };
        let mut tracker = IdentityTracker::new(&cfg.scheme.kind, cfg.scheme.metric, disc.ops(), &fields[0]);
        for (m, u) in fields.iter().enumerate().skip(1) {
            tracker.push(u, taus[m - 1]);
            if let Some(v) = logged.as_ref().and_then(|l| l.get(m)) {
                tracker.check_ratio_term(*v);
            }
        }
        let report = tracker.finish();
        let out = dir.join(format!("verify{t}.csv"));
        output::write_file(&out, &report.to_csv(), true)?;
        if !report.all_passed() {
            failed.push(out.display().to_string());
        }
        reports.push((out, report));
    }
    if failed.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::Verification(format!("residuals above threshold in {}", failed.join(", "))))
    }
}
