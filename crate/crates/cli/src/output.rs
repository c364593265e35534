//! CSV and field-file formats. Reals are written with 17 significant digits
//! (`{:.16e}`) so every logged quantity can be recomputed from the files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hmflow::diagnostics::RunSummary;
use hmflow::{Field64, SchemeKind, StepRecord64, StopRule};

use crate::CliError;

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// Writes `contents` to `path`, refusing to replace an existing file unless
/// `force` is set.
pub fn write_file(path: &Path, contents: &str, force: bool) -> Result<(), CliError> {
    if !force && path.exists() {
        return Err(CliError::Exists(path.to_path_buf()));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub const TRAJECTORY_HEADER: &str = "n,t,tau,energy,update_star_norm,update_grad_norm,stop_quantity,delta_uni,delta_inf,\
min_norm,max_norm,dtu_l2_sq,a2,b2,c2,ratio_term,cg_iterations,cg_residual,tau_above_max";

pub fn trajectory_csv(records: &[StepRecord64]) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for r in records {
        let reals = [
            r.t,
            r.tau,
            r.energy,
            r.update_star_norm,
            r.update_grad_norm,
            r.stop_quantity,
            r.delta_uni,
            r.delta_inf,
            r.min_norm,
            r.max_norm,
            r.dtu_l2_sq,
            r.a2,
            r.b2,
            r.c2,
            r.ratio_term,
        ];
        write!(s, "{}", r.n).unwrap();
        for x in reals {
            write!(s, ",{}", real(x)).unwrap();
        }
        writeln!(s, ",{},{},{}", r.cg_iterations, real(r.cg_residual), r.tau_above_max).unwrap();
    }
    s
}

/// Column `name` of a trajectory CSV as reals.
pub fn trajectory_column(csv: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let mut lines = csv.lines();
    let header = lines.next().ok_or_else(|| CliError::config("empty trajectory file"))?;
    let col = header
        .split(',')
        .position(|h| h == name)
        .ok_or_else(|| CliError::config(format!("trajectory has no `{name}` column")))?;
    lines
        .map(|l| {
            l.split(',')
                .nth(col)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::config(format!("malformed trajectory row `{l}`")))
        })
        .collect()
}

pub const SUMMARY_HEADER: &str = "tau,n_stop,tau_last,final_time,delta_inf,eoc_inf,delta_uni,eoc_uni,delta_ener,eoc_ener,\
energy,a2,b2,c2,tau_above_max,identities_passed";

pub fn summary_csv(rows: &[(RunSummary, bool)]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for (r, ok) in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            real(r.tau),
            r.n_stop,
            real(r.tau_last),
            real(r.final_time),
            real(r.delta_inf),
            opt(r.eoc_inf),
            real(r.delta_uni),
            opt(r.eoc_uni),
            opt(r.delta_ener),
            opt(r.eoc_ener),
            real(r.energy),
            real(r.a2),
            real(r.b2),
            real(r.c2),
            r.tau_above_max,
            ok
        )
        .unwrap();
    }
    s
}

/// Which regularity columns a scheme's table shows.
fn regularity_columns(kind: &SchemeKind<f64>) -> &'static [&'static str] {
    match kind {
        SchemeKind::Euler => &[],
        SchemeKind::Bdf2 => &["A2", "B2"],
        SchemeKind::ThetaMu { .. } => &["A2", "B2", "C2"],
    }
}

/// Convergence table: step size, stopping
/// index, errors with rates, then the scheme's regularity quantities.
pub fn table_csv(
    kind: &SchemeKind<f64>,
    stop: &StopRule<f64>,
    with_energy: bool,
    variable_steps: bool,
    rows: &[RunSummary],
) -> String {
    let n_label = match stop {
        StopRule::Tolerance(_) => "N_stop",
        StopRule::FinalTime(_) => "N",
    };
    let mut header = vec!["tau", n_label, "delta_inf", "eoc_inf", "delta_uni", "eoc_uni"];
    if with_energy {
        header.extend(["delta_ener", "eoc_ener"]);
    }
    if variable_steps {
        header.push(if n_label == "N" { "tau_N" } else { "tau_N_stop" });
    }
    let reg = regularity_columns(kind);
    header.extend(reg);

    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let mut cells = vec![
            real(r.tau),
            r.n_stop.to_string(),
            real(r.delta_inf),
            opt(r.eoc_inf),
            real(r.delta_uni),
            opt(r.eoc_uni),
        ];
        if with_energy {
            cells.extend([opt(r.delta_ener), opt(r.eoc_ener)]);
        }
        if variable_steps {
            cells.push(real(r.tau_last));
        }
        for col in reg {
            cells.push(real(match *col {
                "A2" => r.a2,
                "B2" => r.b2,
                _ => r.c2,
            }));
        }
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Appends one step block of a fields file. Values use the shortest
/// representation that reads back to the same `f64`.
pub fn append_fields(out: &mut String, n: usize, tau: f64, u: &Field64) {
    writeln!(out, "step {n} {tau:e}").unwrap();
    for v in u.iter() {
        writeln!(out, "{:e} {:e} {:e}", v[0], v[1], v[2]).unwrap();
    }
}

pub fn fields_header(num_vertices: usize) -> String {
    format!("# hmflow fields {num_vertices}\n")
}

/// Reads a fields file back into `u⁰, u¹, …` and `τ_1, τ_2, …`.
pub fn parse_fields(text: &str) -> Result<(Vec<Field64>, Vec<f64>), CliError> {
    let bad = |line: usize, msg: &str| CliError::config(format!("fields file line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let nv: usize = header
        .strip_prefix("# hmflow fields ")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| bad(1, "missing `# hmflow fields V` header"))?;
    let mut fields = Vec::new();
    let mut taus = Vec::new();
    while let Some((i, line)) = lines.next() {
        let mut parts = line.split_whitespace();
        let (Some("step"), Some(n), Some(tau)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad(i + 1, "expected `step n tau`"));
        };
        let n: usize = n.parse().map_err(|_| bad(i + 1, "bad step index"))?;
        if n != fields.len() {
            return Err(bad(i + 1, "steps out of order"));
        }
        let tau: f64 = tau.parse().map_err(|_| bad(i + 1, "bad step size"))?;
        if n > 0 {
            taus.push(tau);
        }
        let mut values = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (j, l) = lines.next().ok_or_else(|| bad(i + 1, "truncated step block"))?;
            let v: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| bad(j + 1, "bad value"))?;
            if v.len() != 3 {
                return Err(bad(j + 1, "expected three components"));
            }
            values.push([v[0], v[1], v[2]]);
        }
        fields.push(Field64::from_vec(values));
    }
    if fields.is_empty() {
        return Err(bad(2, "no steps"));
    }
    Ok((fields, taus))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(tau: f64) -> RunSummary {
        RunSummary {
            tau,
            n_stop: 12,
            tau_last: tau,
            final_time: 1.0,
            delta_inf: 1e-3,
            delta_uni: 2e-4,
            delta_ener: Some(1e-2),
            energy: 2.5,
            a2: 0.1,
            b2: 0.2,
            c2: 0.3,
            eoc_inf: None,
            eoc_uni: Some(1.9),
            eoc_ener: None,
            tau_above_max: false,
        }
    }

    #[test]
    fn table_columns_follow_scheme() {
        let rows = [summary(0.0625)];
        let stop = StopRule::Tolerance(1e-6);
        let head = |kind: SchemeKind<f64>| table_csv(&kind, &stop, true, false, &rows).lines().next().unwrap().to_string();
        assert_eq!(head(SchemeKind::Euler), "tau,N_stop,delta_inf,eoc_inf,delta_uni,eoc_uni,delta_ener,eoc_ener");
        assert!(head(SchemeKind::Bdf2).ends_with("eoc_ener,A2,B2"));
        assert!(head(SchemeKind::midpoint()).ends_with("eoc_ener,A2,B2,C2"));
        let singular = table_csv(&SchemeKind::midpoint(), &StopRule::FinalTime(1.0), false, true, &rows);
        assert!(singular.starts_with("tau,N,delta_inf,eoc_inf,delta_uni,eoc_uni,tau_N,A2,B2,C2\n"));
        let row = singular.lines().nth(1).unwrap();
        assert_eq!(row.split(',').count(), 10);
        assert!(row.starts_with("6.2500000000000000e-2,12,"));
        assert!(row.contains(",,"), "missing eoc rendered empty");
    }

    #[test]
    fn fields_round_trip_exactly() {
        let u0 = Field64::from_vec(vec![[0.1, 0.2, 1.0 / 3.0], [std::f64::consts::PI, -0.0, 1e-300]]);
        let u1 = u0.scaled(1.0 / 7.0);
        let mut text = fields_header(2);
        append_fields(&mut text, 0, 0.0, &u0);
        append_fields(&mut text, 1, 0.1, &u1);
        let (fields, taus) = parse_fields(&text).unwrap();
        assert_eq!(fields, vec![u0, u1]);
        assert_eq!(taus, vec![0.1]);
        assert!(parse_fields("# hmflow fields 2\nstep 0 0e0\n1 2 3\n").is_err());
    }

    #[test]
    fn trajectory_columns_read_back() {
        let r = StepRecord64 {
            n: 3,
            t: 0.1875,
            tau: 0.0625,
            energy: 1.0 / 3.0,
            update_star_norm: 0.0,
            update_grad_norm: 0.0,
            stop_quantity: 0.0,
            delta_uni: 0.0,
            delta_inf: 0.0,
            min_norm: 1.0,
            max_norm: 1.0,
            dtu_l2_sq: 0.0,
            a2: 0.0,
            b2: 0.0,
            c2: 0.0,
            ratio_term: 2.0f64.sqrt(),
            cg_iterations: 7,
            cg_residual: 1e-13,
            tau_above_max: false,
        };
        let csv = trajectory_csv(&[r]);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(trajectory_column(&csv, "ratio_term").unwrap(), vec![2.0f64.sqrt()]);
        assert_eq!(trajectory_column(&csv, "energy").unwrap(), vec![1.0 / 3.0]);
        assert!(trajectory_column(&csv, "nope").is_err());
    }
}
