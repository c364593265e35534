use hmflow::diagnostics::{constraint_violation_l1, regularity_quantities, IdentityKind, IdentityTracker};
use hmflow::fem::Metric;
use hmflow::schemes::{run_flow, run_flow_with, StopReason};
use hmflow::{Discretization32, Discretization64, Field64, Problem, SchemeConfig64, SchemeKind, StepPolicy, StopRule};

fn setup(n: usize, problem: Problem) -> (Discretization64, Field64) {
    let d = Discretization64::structured(n).unwrap();
    let u0 = d.interpolate(|x| problem.initial_value(x)).unwrap();
    (d, u0)
}

fn constant(kind: SchemeKind<f64>, metric: Metric, tau: f64, stop: StopRule<f64>) -> SchemeConfig64 {
    SchemeConfig64::new(kind, metric, StepPolicy::Constant { tau }, stop)
}

#[test]
fn identities_hold_along_every_scheme() {
    let (d, u0) = setup(16, Problem::StereoPerturbed);
    let kinds = [
        SchemeKind::Euler,
        SchemeKind::midpoint(),
        SchemeKind::modified_euler(),
        SchemeKind::ThetaMu { theta: 0.75, mu: 0.25 },
        SchemeKind::Bdf2,
    ];
    for kind in kinds {
        for metric in [Metric::L2, Metric::H1] {
            let cfg = constant(kind, metric, 0.0625, StopRule::FinalTime(0.5));
            let mut tracker = IdentityTracker::new(&kind, metric, d.ops(), &u0);
            run_flow_with(&cfg, &u0, &d, |rec, st| {
                if rec.n > 0 {
                    tracker.push(&st.current, rec.tau);
                }
            })
            .unwrap();
            let rep = tracker.finish();
            assert!(rep.all_passed(), "{} {metric}\n{}", kind.label(), rep.to_csv());
            assert!(rep.get(IdentityKind::Energy).is_some());
        }
    }
}

#[test]
fn first_euler_step_violation_equals_update_size() {
    let (d, u0) = setup(16, Problem::StereoPerturbed);
    let tau = 0.125;
    let r = run_flow(&constant(SchemeKind::Euler, Metric::H1, tau, StopRule::FinalTime(tau)), &u0, &d).unwrap();
    let dtu = r.final_field.diff_scaled(&u0, 1.0 / tau);
    let expected = tau * tau * d.ops().lumped_l2_norm_sq(&dtu);
    assert!((constraint_violation_l1(&r.final_field, d.ops()) - expected).abs() < 1e-14);
}

#[test]
fn violation_integrand_is_nonnegative_for_euler_and_bdf2() {
    let (d, u0) = setup(16, Problem::StereoPerturbed);
    for kind in [SchemeKind::Euler, SchemeKind::Bdf2] {
        let r = run_flow(&constant(kind, Metric::L2, 0.0625, StopRule::FinalTime(1.0)), &u0, &d).unwrap();
        let u = &r.final_field;
        let signed: f64 = d
            .ops()
            .lumped_mass
            .diagonal()
            .iter()
            .zip(u.norms_sq())
            .map(|(m, s)| m * (s - 1.0))
            .sum();
        assert!((constraint_violation_l1(u, d.ops()) - signed).abs() <= 1e-13);
    }
}

#[test]
fn bdf2_sup_violation_is_nondecreasing() {
    let (d, u0) = setup(16, Problem::StereoPerturbed);
    let r = run_flow(&constant(SchemeKind::Bdf2, Metric::H1, 0.0625, StopRule::FinalTime(1.0)), &u0, &d).unwrap();
    for w in r.records.windows(2) {
        assert!(w[1].delta_inf >= w[0].delta_inf - 1e-15, "step {}", w[1].n);
    }
}

#[test]
fn logged_regularity_sums_match_recomputation() {
    let (d, u0) = setup(8, Problem::StereoPerturbed);
    let cfg = SchemeConfig64::new(
        SchemeKind::midpoint(),
        Metric::H1,
        StepPolicy::Adaptive {
            tau1: 0.05,
            tau_min: 0.01,
            tau_max: 0.2,
        },
        StopRule::FinalTime(1.0),
    );
    let mut fields = Vec::new();
    let r = run_flow_with(&cfg, &u0, &d, |_, st| fields.push(st.current.clone())).unwrap();
    let taus = r.step_sizes();
    let (a2, b2, c2) = regularity_quantities(&fields, &taus, d.ops());
    let last = r.last_record();
    assert!((last.a2 - a2).abs() <= 1e-12 * a2.max(1.0));
    assert!((last.b2 - b2).abs() <= 1e-12 * b2.max(1.0));
    assert!((last.c2 - c2).abs() <= 1e-12 * c2.max(1.0));
    let dissipated: f64 = r.records.iter().map(|x| x.dtu_l2_sq).sum();
    assert!(a2 <= 4.0 * dissipated);
    assert!(taus.windows(2).any(|w| w[0] != w[1]), "adaptive steps should vary");
}

#[test]
fn tolerance_rule_reaches_small_update() {
    let (d, u0) = setup(8, Problem::StereoPerturbed);
    let r = run_flow(&constant(SchemeKind::midpoint(), Metric::H1, 0.125, StopRule::Tolerance(1e-6)), &u0, &d).unwrap();
    assert_eq!(r.stop_reason, StopReason::Tolerance);
    let last = r.last_record();
    assert!(last.stop_quantity <= 1e-6);
    assert!(r.records[r.n_stop - 1].stop_quantity > 1e-6);
    assert!(r.last_record().energy < r.records[0].energy);
}

#[test]
fn stereographic_map_is_nearly_stationary() {
    let (d, u0) = setup(16, Problem::Stereo);
    let r = run_flow(&constant(SchemeKind::midpoint(), Metric::H1, 0.0625, StopRule::FinalTime(1.0)), &u0, &d).unwrap();
    let e0 = r.records[0].energy;
    let reference = Problem::Stereo.reference_energy().unwrap();
    assert!((r.last_record().energy - e0).abs() < 0.05 * e0);
    assert!((r.last_record().energy - reference).abs() < 0.05 * reference);
}

#[test]
fn single_precision_flow_tracks_double() {
    let d32 = Discretization32::structured(8).unwrap();
    let u32 = d32.interpolate(|x| Problem::StereoPerturbed.initial_value(x)).unwrap();
    let cfg32 = hmflow::SchemeConfig::new(
        SchemeKind::<f32>::midpoint(),
        Metric::H1,
        StepPolicy::Constant { tau: 0.0625 },
        StopRule::FinalTime(0.5),
    );
    let r32 = run_flow(&cfg32, &u32, &d32).unwrap();
    let (d, u0) = setup(8, Problem::StereoPerturbed);
    let r64 = run_flow(&constant(SchemeKind::midpoint(), Metric::H1, 0.0625, StopRule::FinalTime(0.5)), &u0, &d).unwrap();
    assert_eq!(r32.n_stop, r64.n_stop);
    let (e32, e64) = (r32.last_record().energy as f64, r64.last_record().energy);
    assert!((e32 - e64).abs() < 1e-4 * e64);
}
