//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion (written straight to stderr so it shows without
//! `--nocapture`) and then asserts.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hmflow::diagnostics::{IdentityKind, IdentityReport, IdentityTracker};
use hmflow::fem::Metric;
use hmflow::problems::{inverse_stereographic, reference_energy_stereographic, stereographic_energy_with_order};
use hmflow::schemes::{run_flow_with, FlowResult};
use hmflow::{Discretization64, Field64, Problem, SchemeConfig64, SchemeKind, StepPolicy, StopRule};
use hmflow_cli::{execute_sweep, ExperimentConfig};

fn report(criterion: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {criterion}: {status} ({detail})");
}

fn setup(n: usize, problem: Problem) -> (Discretization64, Field64) {
    let d = Discretization64::structured(n).unwrap();
    let u0 = d.interpolate(|x| problem.initial_value(x)).unwrap();
    (d, u0)
}

struct Traced {
    result: FlowResult<f64>,
    fields: Vec<Field64>,
    identities: IdentityReport,
    seconds: f64,
}

/// Runs a flow while streaming every iterate through the identity tracker.
fn traced(cfg: &SchemeConfig64, d: &Discretization64, u0: &Field64, keep_fields: bool) -> Traced {
    let start = Instant::now();
    let mut tracker = IdentityTracker::new(&cfg.kind, cfg.metric, d.ops(), u0);
    let mut fields = Vec::new();
    let result = run_flow_with(cfg, u0, d, |rec, st| {
        if rec.n > 0 {
            tracker.push(&st.current, rec.tau);
            tracker.check_ratio_term(rec.ratio_term);
        }
        if keep_fields {
            fields.push(st.current.clone());
        }
    })
    .expect("flow run");
    Traced {
        result,
        fields,
        identities: tracker.finish(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn constant(kind: SchemeKind<f64>, metric: Metric, tau: f64, stop: StopRule<f64>) -> SchemeConfig64 {
    SchemeConfig64::new(kind, metric, StepPolicy::Constant { tau }, stop)
}

fn residual(rep: &IdentityReport, kind: IdentityKind) -> f64 {
    rep.get(kind).map_or(f64::NAN, |e| e.max_residual)
}

#[test]
fn criterion_1_one_step_family_identities() {
    let (d, u0) = setup(16, Problem::StereoPerturbed);
    let mut pass = true;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for kind in [SchemeKind::Euler, SchemeKind::midpoint(), SchemeKind::modified_euler()] {
        for metric in [Metric::L2, Metric::H1] {
            let t = traced(&constant(kind, metric, 2f64.powi(-4), StopRule::FinalTime(1.0)), &d, &u0, false);
            let e = residual(&t.identities, IdentityKind::Energy);
            let c = residual(&t.identities, IdentityKind::ConstraintVertexwise);
            let steps = t.identities.get(IdentityKind::Energy).map_or(0, |x| x.last_step);
            pass &= e <= 1e-9 && c <= 1e-11 && t.seconds <= 30.0 && steps == t.result.n_stop && steps == 16;
            worst = (worst.0.max(e), worst.1.max(c), worst.2.max(t.seconds));
        }
    }
    report(
        "1 (energy + vertexwise constraint identities, Euler/midpoint/modified Euler x L2/H1)",
        pass,
        &format!("max energy residual {:.2e} <= 1e-9, max constraint residual {:.2e} <= 1e-11, slowest run {:.2}s <= 30s", worst.0, worst.1, worst.2),
    );
    assert!(pass);
}

#[test]
fn criterion_2_bdf2_identities() {
    let (d, u0) = setup(16, Problem::StereoPerturbed);
    let mut pass = true;
    let mut worst = (0.0f64, 0.0f64);
    for metric in [Metric::L2, Metric::H1] {
        let t = traced(&constant(SchemeKind::Bdf2, metric, 2f64.powi(-4), StopRule::FinalTime(1.0)), &d, &u0, false);
        let g = residual(&t.identities, IdentityKind::GEnergy);
        let l1 = residual(&t.identities, IdentityKind::ConstraintL1);
        pass &= g <= 1e-9 && l1 <= 1e-10 && t.identities.get(IdentityKind::GEnergy).unwrap().last_step == 16;
        worst = (worst.0.max(g), worst.1.max(l1));
    }
    report(
        "2 (BDF2 G-energy law + L1 constraint identity, L2/H1)",
        pass,
        &format!("max G residual {:.2e} <= 1e-9, max L1 residual {:.2e} <= 1e-10", worst.0, worst.1),
    );
    assert!(pass);
}

fn sweep_config(kind: &str) -> ExperimentConfig {
    let text = format!(
        "[mesh]\nstructured = 16\n[problem]\nname = stereo-perturbed\n[scheme]\nkind = {kind}\nmetric = h1\ntau = 2^-4\n\
         [stop]\ntolerance = 1e-6\n[sweep]\ntaus = 2^-4, 2^-5, 2^-6, 2^-7, 2^-8\n"
    );
    ExperimentConfig::parse(&text, Path::new(".")).unwrap()
}

#[test]
fn criterion_3_convergence_rates() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for (kind, lo, hi) in [("euler", 0.9, 1.1), ("midpoint", 1.8, 2.05), ("modified-euler", 1.8, 2.05), ("bdf2", 1.8, 2.05)] {
        let outcomes = execute_sweep(&sweep_config(kind), None).unwrap();
        let mut rows: Vec<_> = outcomes.into_iter().map(|o| o.summary.unwrap()).collect();
        hmflow::diagnostics::fill_eoc(&mut rows);
        let slopes: Vec<f64> = rows.iter().filter_map(|r| r.eoc_uni).collect();
        let last = *slopes.last().unwrap_or(&f64::NAN);
        pass &= slopes.len() == 4 && (lo..=hi).contains(&last);
        details.push(format!("{kind} {last:.4} in [{lo}, {hi}]"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 300.0;
    report(
        "3 (final eoc_uni, H1, n=16, tau 2^-4..2^-8, eps 1e-6)",
        pass,
        &format!("{}; total {secs:.1}s <= 300s", details.join(", ")),
    );
    assert!(pass);
}

#[test]
fn criterion_4_sign_and_monotonicity() {
    let (d, u0) = setup(16, Problem::StereoPerturbed);
    let tau = 2f64.powi(-4);
    let mut pass = true;
    let mut min_norm = f64::INFINITY;
    let mut worst_rise = 0.0f64;
    let kinds = [
        SchemeKind::Euler,
        SchemeKind::midpoint(),
        SchemeKind::modified_euler(),
        SchemeKind::ThetaMu { theta: 0.75, mu: 0.25 },
    ];
    for kind in kinds {
        for metric in [Metric::L2, Metric::H1] {
            let t = traced(&constant(kind, metric, tau, StopRule::FinalTime(1.0)), &d, &u0, false);
            let m = t.result.records.iter().map(|r| r.min_norm).fold(f64::INFINITY, f64::min);
            min_norm = min_norm.min(m);
            pass &= m >= 1.0 - 1e-12;
            // all kinds here have θ ≥ 1/2
            let e0 = t.result.records[0].energy;
            for w in t.result.records.windows(2) {
                let rise = (w[1].energy - w[0].energy) / e0;
                worst_rise = worst_rise.max(rise);
                pass &= rise <= 1e-12;
            }
        }
    }
    let mut worst_drop = 0.0f64;
    for metric in [Metric::L2, Metric::H1] {
        let t = traced(&constant(SchemeKind::Bdf2, metric, tau, StopRule::FinalTime(1.0)), &d, &u0, true);
        for w in t.fields.windows(2) {
            let prev = w[0].norms_sq();
            for (z, s) in w[1].norms_sq().into_iter().enumerate() {
                worst_drop = worst_drop.max(prev[z].sqrt() - s.sqrt());
            }
        }
    }
    pass &= worst_drop <= 1e-13;
    report(
        "4 (min|u| >= 1 for mu <= 1/2, BDF2 |u^n(z)| nondecreasing, energy nonincreasing for theta >= 1/2)",
        pass,
        &format!("min |u| = {min_norm:.15}, max BDF2 vertex decrease {worst_drop:.2e}, max relative energy rise {worst_rise:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_theta_one_mu_zero_is_euler() {
    let (d, u0) = setup(16, Problem::StereoPerturbed);
    let tau = 2f64.powi(-4);
    let stop = StopRule::FinalTime(50.0 * tau);
    let a = traced(&constant(SchemeKind::Euler, Metric::H1, tau, stop), &d, &u0, true);
    let b = traced(&constant(SchemeKind::ThetaMu { theta: 1.0, mu: 0.0 }, Metric::H1, tau, stop), &d, &u0, true);
    let worst = a
        .fields
        .iter()
        .zip(&b.fields)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0f64, f64::max);
    let pass = a.fields.len() == 51 && b.fields.len() == 51 && worst <= 1e-13;
    report(
        "5 ((theta, mu) = (1, 0) equals Euler over 50 steps, n=16)",
        pass,
        &format!("{} steps, max nodal difference {worst:.2e} <= 1e-13", a.fields.len() - 1),
    );
    assert!(pass);
}

#[test]
fn criterion_6_variable_step_identities() {
    let (d, u0) = setup(16, Problem::StereoPerturbed);
    let cfg = SchemeConfig64::new(
        SchemeKind::midpoint(),
        Metric::H1,
        StepPolicy::PrescribedGrowth {
            tau1: 2f64.powi(-6),
            c: 1.0,
        },
        StopRule::FinalTime(1.0),
    );
    let t = traced(&cfg, &d, &u0, true);
    let e = residual(&t.identities, IdentityKind::Energy);
    let c = residual(&t.identities, IdentityKind::ConstraintVertexwise);
    let r = residual(&t.identities, IdentityKind::RatioTerm);

    // direct evaluation of Σ τ_n² (s_{n+1}² − 1) ‖d_t u^n‖² over the steps taken
    let taus = t.result.step_sizes();
    let mut direct = 0.0;
    for n in 1..taus.len() {
        let dtu = t.fields[n].diff_scaled(&t.fields[n - 1], 1.0 / taus[n - 1]);
        let s = taus[n] / taus[n - 1];
        direct += taus[n - 1].powi(2) * (s * s - 1.0) * d.ops().l2_norm_sq(&dtu);
    }
    let logged = t.result.last_record().ratio_term;
    let direct_diff = (direct - logged).abs();
    let grows = taus.windows(2).all(|w| w[1] > w[0]);
    let pass = e <= 1e-9 && c <= 1e-11 && r <= 1e-12 && direct_diff <= 1e-12 && grows && taus.len() > 2;
    report(
        "6 (variable-step midpoint, tau_{n+1} = tau_n sqrt(1 + tau_n), tau_1 = 2^-6, H1)",
        pass,
        &format!(
            "{} steps, energy residual {e:.2e} <= 1e-9, constraint residual {c:.2e} <= 1e-11, ratio term {logged:.6e} matches recomputation to {:.2e} <= 1e-12",
            taus.len(),
            r.max(direct_diff)
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7a_midpoint_beats_bdf2() {
    let (d, u0) = setup(16, Problem::StereoPerturbed);
    let tau = 2f64.powi(-6);
    let stop = StopRule::Tolerance(1e-6);
    let mid = traced(&constant(SchemeKind::midpoint(), Metric::H1, tau, stop), &d, &u0, false);
    let bdf = traced(&constant(SchemeKind::Bdf2, Metric::H1, tau, stop), &d, &u0, false);
    let (a, b) = (mid.result.last_record().delta_uni, bdf.result.last_record().delta_uni);
    let pass = a <= 0.5 * b;
    report(
        "7a (midpoint delta_uni <= 1/2 BDF2 delta_uni, tau = 2^-6, H1)",
        pass,
        &format!("midpoint {a:.4e}, BDF2 {b:.4e}, ratio {:.3}", a / b),
    );
    assert!(pass);
}

#[test]
fn criterion_7b_singular_energy_drop() {
    let (d, u0) = setup(32, Problem::Singular);
    let tau = 2f64.powi(-11);
    let t = traced(&constant(SchemeKind::midpoint(), Metric::L2, tau, StopRule::FinalTime(0.2)), &d, &u0, false);
    let recs = &t.result.records;
    let e0 = recs[0].energy;
    let min = recs
        .iter()
        .filter(|r| r.t <= 0.2)
        .map(|r| r.energy)
        .fold(f64::INFINITY, f64::min);
    let drop = (e0 - min) / e0;
    // the first steps smooth the initial kink; report the later collapse too
    let steepest = |from: f64| {
        recs.windows(2)
            .filter(|w| w[0].t >= from)
            .max_by(|a, b| (a[0].energy - a[1].energy).total_cmp(&(b[0].energy - b[1].energy)))
            .map_or(f64::NAN, |w| w[1].t)
    };
    let pass = drop > 0.3;
    report(
        "7b (singular data, L2 midpoint, n=32, tau=2^-11: energy drop > 30% within t <= 0.2)",
        pass,
        &format!(
            "I(0) = {e0:.4}, min I = {min:.4}, drop {:.1}%, steepest decay at t = {:.4} (t = {:.4} after t = 0.01)",
            100.0 * drop,
            steepest(0.0),
            steepest(0.01)
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_energy_oracles() {
    let p = 32;
    let self_consistency = (stereographic_energy_with_order(p) - stereographic_energy_with_order(2 * p)).abs();
    let reference = reference_energy_stereographic();
    let d = Discretization64::structured(128).unwrap();
    let u = d.interpolate(inverse_stereographic).unwrap();
    let rel = ((d.ops().energy(&u) - reference) / reference).abs();
    let pass = self_consistency <= 1e-12 && rel <= 1e-3;
    report(
        "8 (reference energy quadrature, interpolant energy on n=128)",
        pass,
        &format!("order {p} vs {} differ by {self_consistency:.1e} <= 1e-12; I = {reference:.12}, discrete relative error {rel:.2e} <= 1e-3", 2 * p),
    );
    assert!(pass);
}

#[test]
fn criterion_9_thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        "[mesh]\nstructured = 16\n[problem]\nname = stereo-perturbed\n[scheme]\nkind = midpoint\nmetric = h1\ntau = 2^-4\n\
         [stop]\ntolerance = 1e-6\n[sweep]\ntaus = 2^-4, 2^-5, 2^-6, 2^-7\n",
    )
    .unwrap();
    let table = |threads: &str| {
        let out = dir.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_hmflow"))
            .args(["table", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(out.join("table.csv")).unwrap()
    };
    let (one, four) = (table("1"), table("4"));
    let pass = one == four && !one.is_empty();
    report(
        "9 (table output identical for --threads 1 and --threads 4)",
        pass,
        &format!("{} bytes, identical: {}", one.len(), one == four),
    );
    assert!(pass);
}
