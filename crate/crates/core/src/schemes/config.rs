use std::fmt;

use crate::error::SchemeError;
use crate::fem::Metric;
use crate::scalar::Real;
use crate::tangent::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind<T> {
    /// Linearly implicit Euler at every step.
    Euler,
    /// One Euler step, then the (θ, μ)-method with anchor `u^{n-1} + μ τ_n d_t u^{n-1}`.
    ThetaMu { theta: T, mu: T },
    /// One Euler step, then two-step BDF with anchor `2u^{n-1} − u^{n-2}`.
    Bdf2,
}

impl<T: Real> SchemeKind<T> {
    pub fn midpoint() -> Self {
        Self::ThetaMu {
            theta: T::lit(0.5),
            mu: T::lit(0.5),
        }
    }

    pub fn modified_euler() -> Self {
        Self::ThetaMu {
            theta: T::one(),
            mu: T::lit(0.5),
        }
    }

    /// `(θ, μ)` of the one-step family; Euler is `(1, 0)`.
    pub fn theta_mu(&self) -> Option<(T, T)> {
        match *self {
            Self::Euler => Some((T::one(), T::zero())),
            Self::ThetaMu { theta, mu } => Some((theta, mu)),
            Self::Bdf2 => None,
        }
    }

    /// Short name used in tables: euler, midpoint, modified-euler, bdf2 or theta-mu.
    pub fn label(&self) -> String {
        match self.theta_mu() {
            None => "bdf2".into(),
            Some(_) if matches!(self, Self::Euler) => "euler".into(),
            Some((t, m)) if t == T::lit(0.5) && m == T::lit(0.5) => "midpoint".into(),
            Some((t, m)) if t == T::one() && m == T::lit(0.5) => "modified-euler".into(),
            Some((t, m)) => format!("theta-mu({t},{m})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy<T> {
    Constant { tau: T },
    /// `τ_{n+1} = τ_n √(1 + c τ_n)`.
    PrescribedGrowth { tau1: T, c: T },
    /// Shrink when `‖d_t u^n‖` grows, enlarge otherwise; bounded below by `tau_min`.
    Adaptive { tau1: T, tau_min: T, tau_max: T },
}

impl<T: Real> StepPolicy<T> {
    pub fn initial_step(&self) -> T {
        match *self {
            Self::Constant { tau } => tau,
            Self::PrescribedGrowth { tau1, .. } | Self::Adaptive { tau1, .. } => tau1,
        }
    }

    /// Same policy restarted from a different first step.
    pub fn with_initial_step(&self, tau: T) -> Self {
        match *self {
            Self::Constant { .. } => Self::Constant { tau },
            Self::PrescribedGrowth { c, .. } => Self::PrescribedGrowth { tau1: tau, c },
            Self::Adaptive { tau_min, tau_max, .. } => Self::Adaptive {
                tau1: tau,
                tau_min,
                tau_max,
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule<T> {
    /// Stop once `‖w‖_⋆ + c ‖∇w‖ ≤ ε` for the step update `w` and implicit weight `c`.
    Tolerance(T),
    /// Stop once `t_n ≥ T`.
    FinalTime(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig<T> {
    pub kind: SchemeKind<T>,
    pub metric: Metric,
    pub step_policy: StepPolicy<T>,
    pub stop: StopRule<T>,
    pub max_steps: usize,
    pub solver: SolverOptions<T>,
}

impl<T: Real> SchemeConfig<T> {
    pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

    pub fn new(kind: SchemeKind<T>, metric: Metric, step_policy: StepPolicy<T>, stop: StopRule<T>) -> Self {
        Self {
            kind,
            metric,
            step_policy,
            stop,
            max_steps: Self::DEFAULT_MAX_STEPS,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |m: &str| Err(SchemeError::Config(m.to_string()));
        let pos = |x: T| x > T::zero() && !x.is_nan();
        if let SchemeKind::ThetaMu { theta, mu } = self.kind {
            if !(theta > T::zero() && theta <= T::one()) {
                return bad("theta must lie in (0, 1]");
            }
            if !(mu >= T::zero() && mu <= T::one()) {
                return bad("mu must lie in [0, 1]");
            }
        }
        if matches!(self.kind, SchemeKind::Bdf2) && !self.step_policy.is_constant() {
            return bad("bdf2 supports only a constant step size");
        }
        match self.step_policy {
            StepPolicy::Constant { tau } if !(pos(tau) && tau.is_finite()) => return bad("tau must be positive"),
            StepPolicy::PrescribedGrowth { tau1, c } if !(pos(tau1) && tau1.is_finite() && pos(c) && c.is_finite()) => {
                return bad("growth policy needs tau1 > 0 and c > 0")
            }
            StepPolicy::Adaptive { tau1, tau_min, tau_max }
                if !(pos(tau1) && pos(tau_min) && tau_min < tau_max && tau_max.is_finite()) =>
            {
                return bad("adaptive policy needs tau1 > 0 and 0 < tau_min < tau_max")
            }
            _ => {}
        }
        match self.stop {
            StopRule::Tolerance(eps) if !pos(eps) => return bad("stopping tolerance must be positive"),
            StopRule::FinalTime(t) if !(pos(t) && t.is_finite()) => return bad("final time must be positive"),
            _ => {}
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        Ok(())
    }
}

impl<T: Real> fmt::Display for SchemeConfig<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} flow)", self.kind.label(), self.metric)
    }
}
