use crate::error::{SchemeError, SolverError};
use crate::fem::{Discretization, Metric, NodalField};
use crate::scalar::Real;
use crate::tangent::{build_tangent_basis, solve_step, SolverOptions, TangentSolution};

/// State after `step` completed steps.
///
/// `current` is `u^{step}`; `previous` is `u^{step-1}` and `dtu` the backward
/// difference quotient `d_t u^{step}` (both absent before the first step).
/// Boundary values are never touched by the updates, so they stay equal to
/// those of `u⁰`.
#[derive(Debug, Clone)]
pub struct FlowState<T> {
    pub step: usize,
    pub t: T,
    pub current: NodalField<T>,
    pub previous: Option<NodalField<T>>,
    pub dtu: Option<NodalField<T>>,
    pub tau: Option<T>,
}

/// Result of one step, not yet committed to the state.
#[derive(Debug, Clone)]
pub struct StepOutput<T> {
    pub u_new: NodalField<T>,
    /// Tangent solve result: `d_t u^n` for the one-step family, `u̇^n` for BDF2.
    pub update: NodalField<T>,
    /// Backward difference quotient `d_t u^n = (u^n − u^{n-1}) / τ_n`.
    pub dtu: NodalField<T>,
    /// Implicit weight multiplying `(∇w, ∇v)`: `τ`, `θτ` or `2τ/3`.
    pub coeff: T,
    pub iterations: usize,
    pub residual: T,
}

impl<T: Real> FlowState<T> {
    pub fn new(u0: NodalField<T>) -> Self {
        Self {
            step: 0,
            t: T::zero(),
            current: u0,
            previous: None,
            dtu: None,
            tau: None,
        }
    }

    pub fn advance(&mut self, out: StepOutput<T>, tau: T) {
        self.step += 1;
        self.t += tau;
        self.previous = Some(std::mem::replace(&mut self.current, out.u_new));
        self.dtu = Some(out.dtu);
        self.tau = Some(tau);
    }
}

fn tangent_solve<T: Real>(
    step: usize,
    anchor: &NodalField<T>,
    load: &NodalField<T>,
    coeff: T,
    disc: &Discretization<T>,
    metric: Metric,
    opts: &SolverOptions<T>,
) -> Result<TangentSolution<T>, SchemeError> {
    let wrap = |source: SolverError| SchemeError::Step { step, source };
    let basis = build_tangent_basis(anchor, disc.free_vertices()).map_err(wrap)?;
    solve_step(metric, coeff, disc.ops(), load, &basis, opts).map_err(wrap)
}

fn missing_history(step: usize) -> SchemeError {
    SchemeError::Config(format!("step {step} needs two previous iterates; the first step must be an Euler step"))
}

/// Linearly implicit Euler: `w ⟂ u^{n-1}` nodally with
/// `(w, v)_⋆ + τ (∇w, ∇v) = −(∇u^{n-1}, ∇v)`; `u^n = u^{n-1} + τ w`.
pub fn euler_step<T: Real>(
    state: &FlowState<T>,
    tau: T,
    disc: &Discretization<T>,
    metric: Metric,
    opts: &SolverOptions<T>,
) -> Result<StepOutput<T>, SchemeError> {
    let load = disc.ops().stiffness.apply_field(&state.current).scaled(-T::one());
    let sol = tangent_solve(state.step + 1, &state.current, &load, tau, disc, metric, opts)?;
    let u_new = state.current.add_scaled(tau, &sol.update);
    Ok(StepOutput {
        u_new,
        dtu: sol.update.clone(),
        update: sol.update,
        coeff: tau,
        iterations: sol.iterations,
        residual: sol.relative_residual,
    })
}

/// (θ, μ)-method step with anchor `û = u^{n-1} + μ τ_n d_t u^{n-1}` and
/// implicit weight `θ τ_n`.
pub fn theta_mu_step<T: Real>(
    state: &FlowState<T>,
    theta: T,
    mu: T,
    tau: T,
    disc: &Discretization<T>,
    metric: Metric,
    opts: &SolverOptions<T>,
) -> Result<StepOutput<T>, SchemeError> {
    let dtu_prev = state.dtu.as_ref().ok_or_else(|| missing_history(state.step + 1))?;
    let anchor = state.current.add_scaled(mu * tau, dtu_prev);
    let coeff = theta * tau;
    let load = disc.ops().stiffness.apply_field(&state.current).scaled(-T::one());
    let sol = tangent_solve(state.step + 1, &anchor, &load, coeff, disc, metric, opts)?;
    let u_new = state.current.add_scaled(tau, &sol.update);
    Ok(StepOutput {
        u_new,
        dtu: sol.update.clone(),
        update: sol.update,
        coeff,
        iterations: sol.iterations,
        residual: sol.relative_residual,
    })
}

/// BDF2 step: `u̇ ⟂ 2u^{n-1} − u^{n-2}` nodally with
/// `(u̇, v)_⋆ + (2τ/3)(∇u̇, ∇v) = −⅓(∇[4u^{n-1} − u^{n-2}], ∇v)`;
/// `u^n = (4u^{n-1} − u^{n-2} + 2τ u̇)/3`.
pub fn bdf2_step<T: Real>(
    state: &FlowState<T>,
    tau: T,
    disc: &Discretization<T>,
    metric: Metric,
    opts: &SolverOptions<T>,
) -> Result<StepOutput<T>, SchemeError> {
    let prev = state.previous.as_ref().ok_or_else(|| missing_history(state.step + 1))?;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let anchor = NodalField::lin_comb(two, &state.current, -T::one(), prev);
    let base = NodalField::lin_comb(T::lit(4.0), &state.current, -T::one(), prev);
    let load = disc.ops().stiffness.apply_field(&base).scaled(-T::one() / three);
    let coeff = two * tau / three;
    let sol = tangent_solve(state.step + 1, &anchor, &load, coeff, disc, metric, opts)?;
    let u_new = base.add_scaled(two * tau, &sol.update).scaled(T::one() / three);
    let dtu = u_new.diff_scaled(&state.current, T::one() / tau);
    Ok(StepOutput {
        u_new,
        dtu,
        update: sol.update,
        coeff,
        iterations: sol.iterations,
        residual: sol.relative_residual,
    })
}
