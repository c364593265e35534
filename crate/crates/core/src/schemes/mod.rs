//! Time stepping for the discrete harmonic map heat flow.
//!
//! Every scheme starts with one linearly implicit Euler step; the (θ, μ)
//! family and BDF2 take over from step 2. [`run_flow`] drives the iteration,
//! emits one [`StepRecord`] per step and hands each new state to an optional
//! observer (used for identity verification and field output).

mod config;
mod steps;

pub use config::{SchemeConfig, SchemeKind, StepPolicy, StopRule};
pub use steps::{bdf2_step, euler_step, theta_mu_step, FlowState, StepOutput};

use std::fmt;

use crate::diagnostics::{constraint_violation_l1, constraint_violation_linf, norm_range};
use crate::error::SchemeError;
use crate::fem::{Discretization, NodalField};
use crate::scalar::Real;

/// Per-step log. Norms of `d_t u` and the regularity sums use the consistent
/// L² mass regardless of the flow metric.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub n: usize,
    pub t: T,
    /// `τ_n` (zero for the initial record).
    pub tau: T,
    /// `I[u^n]`.
    pub energy: T,
    /// `‖w‖_⋆` of the solved update (`d_t u^n`, or `u̇^n` for BDF2).
    pub update_star_norm: T,
    pub update_grad_norm: T,
    /// `‖w‖_⋆ + c ‖∇w‖`, compared against the stopping tolerance.
    pub stop_quantity: T,
    pub delta_uni: T,
    pub delta_inf: T,
    pub min_norm: T,
    pub max_norm: T,
    /// `‖d_t u^n‖²`.
    pub dtu_l2_sq: T,
    /// Running `Σ_{k=2}^n τ_k² ‖d_t² u^k‖²`.
    pub a2: T,
    /// `‖d_t u¹‖²`.
    pub b2: T,
    /// `‖d_t u^n‖²`, i.e. `C²` if the run stops at `n`.
    pub c2: T,
    /// Running `Σ_{k=1}^{n-1} τ_k² (s_{k+1}² − 1) ‖d_t u^k‖²` with `s_{k+1} = τ_{k+1}/τ_k`.
    pub ratio_term: T,
    pub cg_iterations: usize,
    pub cg_residual: T,
    /// Set when an adaptive policy produced `τ_n > τ_max`.
    pub tau_above_max: bool,
}

impl<T: Real> StepRecord<T> {
    fn initial(u0: &NodalField<T>, disc: &Discretization<T>) -> Self {
        let (min_norm, max_norm) = norm_range(u0);
        Self {
            n: 0,
            t: T::zero(),
            tau: T::zero(),
            energy: disc.ops().energy(u0),
            update_star_norm: T::zero(),
            update_grad_norm: T::zero(),
            stop_quantity: T::zero(),
            delta_uni: constraint_violation_l1(u0, disc.ops()),
            delta_inf: constraint_violation_linf(u0),
            min_norm,
            max_norm,
            dtu_l2_sq: T::zero(),
            a2: T::zero(),
            b2: T::zero(),
            c2: T::zero(),
            ratio_term: T::zero(),
            cg_iterations: 0,
            cg_residual: T::zero(),
            tau_above_max: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    FinalTime,
}

#[derive(Debug, Clone)]
pub struct FlowResult<T> {
    /// Records for `n = 0, …, n_stop`.
    pub records: Vec<StepRecord<T>>,
    /// `u^{n_stop}`.
    pub final_field: NodalField<T>,
    /// Approximate harmonic map: `u^{n_stop − 1}` under the tolerance rule,
    /// `u^{n_stop}` under the final-time rule.
    pub approx_map: NodalField<T>,
    pub n_stop: usize,
    pub stop_reason: StopReason,
}

impl<T: Real> FlowResult<T> {
    pub fn last_record(&self) -> &StepRecord<T> {
        self.records.last().expect("at least the initial record")
    }

    pub fn step_sizes(&self) -> Vec<T> {
        self.records.iter().skip(1).map(|r| r.tau).collect()
    }
}

/// A failed run with the trajectory computed so far.
#[derive(Debug)]
pub struct FlowError<T> {
    pub error: SchemeError,
    pub records: Vec<StepRecord<T>>,
    pub last_field: Option<NodalField<T>>,
}

impl<T> fmt::Display for FlowError<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl<T: fmt::Debug> std::error::Error for FlowError<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl<T> From<SchemeError> for FlowError<T> {
    fn from(error: SchemeError) -> Self {
        Self {
            error,
            records: Vec::new(),
            last_field: None,
        }
    }
}

/// Step size for step `n + 1` given `τ_n` and the L² norms of `d_t u^n`
/// and `d_t u^{n-1}`. Without a previous norm the adaptive rule keeps `τ_n`.
pub fn next_step_size<T: Real>(policy: &StepPolicy<T>, tau: T, dtu_norm: T, prev_dtu_norm: Option<T>) -> T {
    match *policy {
        StepPolicy::Constant { tau } => tau,
        StepPolicy::PrescribedGrowth { c, .. } => tau * (T::one() + c * tau).sqrt(),
        StepPolicy::Adaptive { tau_min, tau_max, .. } => match prev_dtu_norm {
            None => tau,
            Some(prev) => {
                let r = tau / tau_max;
                let candidate = if dtu_norm > prev {
                    tau * (T::one() - r).max(T::zero()).sqrt()
                } else {
                    tau * (T::one() + r).sqrt()
                };
                candidate.max(tau_min)
            }
        },
    }
}

/// Tolerance on `| |u⁰(z)| − 1 |`.
pub fn unit_length_tolerance<T: Real>() -> T {
    T::tol_floor(1e-12, 64.0)
}

fn check_unit_length<T: Real>(u0: &NodalField<T>) -> Result<(), SchemeError> {
    let tol = unit_length_tolerance::<T>();
    for (z, v) in u0.iter().enumerate() {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !((norm - T::one()).abs() <= tol) {
            return Err(SchemeError::NotUnitLength {
                vertex: z,
                norm: norm.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(())
}

pub fn run_flow<T: Real>(
    config: &SchemeConfig<T>,
    u0: &NodalField<T>,
    disc: &Discretization<T>,
) -> Result<FlowResult<T>, FlowError<T>> {
    run_flow_with(config, u0, disc, |_, _| {})
}

/// Runs the flow, calling `observer` with the record and the state after
/// every step (and once for the initial state).
pub fn run_flow_with<T: Real>(
    config: &SchemeConfig<T>,
    u0: &NodalField<T>,
    disc: &Discretization<T>,
    mut observer: impl FnMut(&StepRecord<T>, &FlowState<T>),
) -> Result<FlowResult<T>, FlowError<T>> {
    config.validate()?;
    if u0.len() != disc.num_vertices() {
        return Err(SchemeError::Fem(crate::error::FemError::Dimension {
            expected: disc.num_vertices(),
            got: u0.len(),
        })
        .into());
    }
    check_unit_length(u0)?;

    let ops = disc.ops();
    let metric = config.metric;
    let mut state = FlowState::new(u0.clone());
    let mut records = vec![StepRecord::initial(u0, disc)];
    observer(&records[0], &state);

    let time_slack = T::tol_floor(1e-12, 16.0);
    let mut tau = config.step_policy.initial_step();
    let mut prev_dtu_norm: Option<T> = None;
    let (mut a2, mut b2, mut ratio_term) = (T::zero(), T::zero(), T::zero());

    loop {
        let n = state.step + 1;
        if n > config.max_steps {
            return Err(FlowError {
                error: SchemeError::StepLimit(config.max_steps),
                records,
                last_field: Some(state.current),
            });
        }
        let out = if n == 1 {
            euler_step(&state, tau, disc, metric, &config.solver)
        } else {
            match config.kind {
                SchemeKind::Euler => euler_step(&state, tau, disc, metric, &config.solver),
                SchemeKind::ThetaMu { theta, mu } => theta_mu_step(&state, theta, mu, tau, disc, metric, &config.solver),
                SchemeKind::Bdf2 => bdf2_step(&state, tau, disc, metric, &config.solver),
            }
        };
        let out = match out {
            Ok(out) => out,
            Err(error) => {
                return Err(FlowError {
                    error,
                    records,
                    last_field: Some(state.current),
                })
            }
        };

        let star = ops.norm_star(metric, &out.update);
        let grad = ops.grad_norm_sq(&out.update).max(T::zero()).sqrt();
        let stop_quantity = star + out.coeff * grad;
        let dtu_l2_sq = ops.l2_norm_sq(&out.dtu);
        match (&state.dtu, state.tau) {
            (Some(prev), Some(prev_tau)) => {
                a2 += ops.l2_norm_sq(&out.dtu.add_scaled(-T::one(), prev));
                ratio_term += (tau * tau - prev_tau * prev_tau) * ops.l2_norm_sq(prev);
            }
            _ => b2 = dtu_l2_sq,
        }
        let tau_above_max = matches!(config.step_policy, StepPolicy::Adaptive { tau_max, .. } if tau > tau_max);
        let (cg_iterations, cg_residual) = (out.iterations, out.residual);

        state.advance(out, tau);
        let u = &state.current;
        let (min_norm, max_norm) = norm_range(u);
        let record = StepRecord {
            n,
            t: state.t,
            tau,
            energy: ops.energy(u),
            update_star_norm: star,
            update_grad_norm: grad,
            stop_quantity,
            delta_uni: constraint_violation_l1(u, ops),
            delta_inf: constraint_violation_linf(u),
            min_norm,
            max_norm,
            dtu_l2_sq,
            a2,
            b2,
            c2: dtu_l2_sq,
            ratio_term,
            cg_iterations,
            cg_residual,
            tau_above_max,
        };
        observer(&record, &state);
        records.push(record);

        let reason = match config.stop {
            StopRule::Tolerance(eps) if stop_quantity <= eps => Some(StopReason::Tolerance),
            StopRule::FinalTime(t_end) if state.t >= t_end * (T::one() - time_slack) => Some(StopReason::FinalTime),
            _ => None,
        };
        if let Some(stop_reason) = reason {
            let approx_map = match stop_reason {
                StopReason::Tolerance => state.previous.clone().expect("at least one step taken"),
                StopReason::FinalTime => state.current.clone(),
            };
            return Ok(FlowResult {
                records,
                final_field: state.current,
                approx_map,
                n_stop: n,
                stop_reason,
            });
        }

        let dtu_norm = dtu_l2_sq.max(T::zero()).sqrt();
        tau = next_step_size(&config.step_policy, tau, dtu_norm, prev_dtu_norm);
        prev_dtu_norm = Some(dtu_norm);
    }
}
