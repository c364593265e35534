//! Reported quantities: constraint violations, energy errors, regularity
//! sums, convergence rates and discrete identity checks.

mod identities;

pub use identities::{verify_identities, IdentityEntry, IdentityKind, IdentityReport, IdentityTracker};

use crate::fem::{FemOperators, NodalField};
use crate::scalar::{vec3, Real};
use crate::schemes::FlowResult;

/// `δ_uni[u] = ‖I_h |u|² − 1‖_{L¹}`, evaluated with the lumped mass.
pub fn constraint_violation_l1<T: Real>(u: &NodalField<T>, ops: &FemOperators<T>) -> T {
    ops.lumped_mass
        .diagonal()
        .iter()
        .zip(u.iter())
        .map(|(&m, v)| m * (vec3::norm_sq(v) - T::one()).abs())
        .sum()
}

/// `δ_∞[u] = max_z | |u(z)| − 1 |`.
pub fn constraint_violation_linf<T: Real>(u: &NodalField<T>) -> T {
    u.iter().map(|v| (vec3::norm(v) - T::one()).abs()).fold(T::zero(), T::max)
}

/// Smallest and largest vertex length `|u(z)|`.
pub fn norm_range<T: Real>(u: &NodalField<T>) -> (T, T) {
    u.iter().map(vec3::norm).fold((T::infinity(), T::neg_infinity()), |(lo, hi), n| (lo.min(n), hi.max(n)))
}

/// Logarithmic slopes `−ln(e_{k+1}/e_k) / ln(τ_k/τ_{k+1})`; `None` where an
/// error is not positive or the step sizes do not decrease.
pub fn eoc(errors: &[f64], steps: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(errors.len(), steps.len());
    errors
        .windows(2)
        .zip(steps.windows(2))
        .map(|(e, s)| {
            let ok = e[0] > 0.0 && e[1] > 0.0 && e.iter().all(|x| x.is_finite()) && s[0] > s[1] && s[1] > 0.0;
            ok.then(|| -(e[1] / e[0]).ln() / (s[0] / s[1]).ln())
        })
        .collect()
}

/// `(A², B², C²)` of a trajectory `u⁰, …, u^N` with step sizes `τ_1, …, τ_N`:
/// `A² = Σ_{n≥2} τ_n² ‖d_t² u^n‖²`, `B² = ‖d_t u¹‖²`, `C² = ‖d_t u^N‖²`
/// (consistent-mass L² norms).
pub fn regularity_quantities<T: Real>(fields: &[NodalField<T>], taus: &[T], ops: &FemOperators<T>) -> (T, T, T) {
    assert_eq!(fields.len(), taus.len() + 1, "one step size per step");
    let dtu: Vec<NodalField<T>> = fields
        .windows(2)
        .zip(taus)
        .map(|(w, &tau)| w[1].diff_scaled(&w[0], T::one() / tau))
        .collect();
    let a2 = dtu.windows(2).map(|w| ops.l2_norm_sq(&w[1].diff_scaled(&w[0], T::one()))).sum();
    let b2 = dtu.first().map_or(T::zero(), |d| ops.l2_norm_sq(d));
    let c2 = dtu.last().map_or(T::zero(), |d| ops.l2_norm_sq(d));
    (a2, b2, c2)
}

/// Tabulated quantities of one run, evaluated at `u^{N_stop}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// First step size (the sweep parameter).
    pub tau: f64,
    pub n_stop: usize,
    /// `τ_{N_stop}`; differs from `tau` for variable step sizes.
    pub tau_last: f64,
    pub final_time: f64,
    pub delta_inf: f64,
    pub delta_uni: f64,
    pub delta_ener: Option<f64>,
    pub energy: f64,
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
    pub eoc_inf: Option<f64>,
    pub eoc_uni: Option<f64>,
    pub eoc_ener: Option<f64>,
    pub tau_above_max: bool,
}

fn f<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl RunSummary {
    pub fn from_result<T: Real>(result: &FlowResult<T>, reference_energy: Option<f64>) -> Self {
        let last = result.last_record();
        let tau = result.records.get(1).map_or(0.0, |r| f(r.tau));
        Self {
            tau,
            n_stop: result.n_stop,
            tau_last: f(last.tau),
            final_time: f(last.t),
            delta_inf: f(last.delta_inf),
            delta_uni: f(last.delta_uni),
            delta_ener: reference_energy.map(|e| (f(last.energy) - e).abs()),
            energy: f(last.energy),
            a2: f(last.a2),
            b2: f(last.b2),
            c2: f(last.c2),
            eoc_inf: None,
            eoc_uni: None,
            eoc_ener: None,
            tau_above_max: result.records.iter().any(|r| r.tau_above_max),
        }
    }
}

/// Fills the `eoc_*` fields of a sweep ordered by decreasing `tau`; the first
/// row has none.
pub fn fill_eoc(rows: &mut [RunSummary]) {
    let steps: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let column = |get: &dyn Fn(&RunSummary) -> f64| eoc(&rows.iter().map(get).collect::<Vec<_>>(), &steps);
    let inf = column(&|r| r.delta_inf);
    let uni = column(&|r| r.delta_uni);
    let ener = column(&|r| r.delta_ener.unwrap_or(f64::NAN));
    for (k, row) in rows.iter_mut().enumerate() {
        row.eoc_inf = None;
        row.eoc_uni = None;
        row.eoc_ener = None;
        if k > 0 {
            row.eoc_inf = inf[k - 1];
            row.eoc_uni = uni[k - 1];
            row.eoc_ener = ener[k - 1];
        }
    }
}
