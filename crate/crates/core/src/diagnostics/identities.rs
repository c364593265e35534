//! Discrete energy and constraint identities recomputed from stored fields.
//!
//! The tracker sees only `u⁰, u¹, …` and the step sizes; every norm,
//! difference quotient and running sum is rebuilt here, independently of the
//! bookkeeping in the time stepper.

use std::fmt;

use crate::fem::{FemOperators, Metric, NodalField};
use crate::scalar::{vec3, Real};
use crate::schemes::SchemeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdentityKind {
    /// Energy identity of the (θ, μ)-family (relative residual).
    Energy,
    /// Vertexwise constraint identity of the (θ, μ)-family (absolute).
    ConstraintVertexwise,
    /// `min_z |u^m(z)| ≥ 1` for `μ ≤ 1/2` and nonincreasing steps.
    Sign,
    /// `I[u^m] ≤ I[u^{m-1}]` for `θ ≥ 1/2`, relative to `I[u⁰]`.
    EnergyDecrease,
    /// BDF2 G-norm energy law (relative).
    GEnergy,
    /// BDF2 L¹ constraint identity (relative).
    ConstraintL1,
    /// BDF2: `|u^m(z)|` nondecreasing in `m` (absolute).
    NormMonotone,
    /// Logged step-ratio sum versus its recomputation (absolute).
    RatioTerm,
}

impl IdentityKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Energy => "energy",
            Self::ConstraintVertexwise => "constraint-vertexwise",
            Self::Sign => "sign",
            Self::EnergyDecrease => "energy-decrease",
            Self::GEnergy => "g-energy",
            Self::ConstraintL1 => "constraint-l1",
            Self::NormMonotone => "norm-monotone",
            Self::RatioTerm => "ratio-term",
        }
    }

    /// Acceptance threshold in double precision.
    pub fn threshold(&self) -> f64 {
        match self {
            Self::Energy | Self::GEnergy => 1e-9,
            Self::ConstraintVertexwise => 1e-11,
            Self::ConstraintL1 => 1e-10,
            Self::Sign | Self::EnergyDecrease | Self::RatioTerm => 1e-12,
            Self::NormMonotone => 1e-13,
        }
    }
}

impl fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityEntry {
    pub kind: IdentityKind,
    pub first_step: usize,
    pub last_step: usize,
    /// Step at which `max_residual` was attained.
    pub worst_step: usize,
    pub max_residual: f64,
    pub threshold: f64,
}

impl IdentityEntry {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.threshold
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdentityReport {
    pub entries: Vec<IdentityEntry>,
}

impl IdentityReport {
    pub fn get(&self, kind: IdentityKind) -> Option<&IdentityEntry> {
        self.entries.iter().find(|e| e.kind == kind)
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(IdentityEntry::passed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("identity,first_step,last_step,worst_step,max_residual,threshold,passed\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{},{:.16e},{:.16e},{}\n",
                e.kind,
                e.first_step,
                e.last_step,
                e.worst_step,
                e.max_residual,
                e.threshold,
                e.passed()
            ));
        }
        s
    }
}

enum Family<T> {
    ThetaMu { theta: T, mu: T },
    Bdf2,
}

/// Streaming identity checker: feed `u^m` and `τ_m` for `m = 1, 2, …`.
pub struct IdentityTracker<'a, T> {
    ops: &'a FemOperators<T>,
    metric: Metric,
    family: Family<T>,
    m: usize,
    lumped: Vec<T>,
    u0_norm_sq: Vec<T>,
    energy0: T,
    energy_prev: T,
    current: NodalField<T>,
    previous: Option<NodalField<T>>,
    dtu_prev: Option<NodalField<T>>,
    tau_prev: Option<T>,
    steps_nonincreasing: bool,
    delta1_sq: Vec<T>,
    dissipation: T,
    // (θ, μ) vertex sums
    acc_ratio: Vec<T>,
    acc_d2: Vec<T>,
    acc_d1: Vec<T>,
    // BDF2 vertex sums and G-norm bookkeeping
    second_diff_sum: Vec<T>,
    second_diff_weighted: Vec<T>,
    third_power: T,
    g1: T,
    ratio_term: T,
    report: IdentityReport,
}

fn scalar<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn relative<T: Real>(diff: T, scale: T) -> T {
    diff.abs() / scale.abs().max(T::min_positive_value())
}

impl<'a, T: Real> IdentityTracker<'a, T> {
    pub fn new(kind: &SchemeKind<T>, metric: Metric, ops: &'a FemOperators<T>, u0: &NodalField<T>) -> Self {
        let family = match kind.theta_mu() {
            Some((theta, mu)) => Family::ThetaMu { theta, mu },
            None => Family::Bdf2,
        };
        let nv = u0.len();
        let energy0 = ops.energy(u0);
        Self {
            ops,
            metric,
            family,
            m: 0,
            lumped: ops.lumped_mass.diagonal(),
            u0_norm_sq: u0.norms_sq(),
            energy0,
            energy_prev: energy0,
            current: u0.clone(),
            previous: None,
            dtu_prev: None,
            tau_prev: None,
            steps_nonincreasing: true,
            delta1_sq: vec![T::zero(); nv],
            dissipation: T::zero(),
            acc_ratio: vec![T::zero(); nv],
            acc_d2: vec![T::zero(); nv],
            acc_d1: vec![T::zero(); nv],
            second_diff_sum: vec![T::zero(); nv],
            second_diff_weighted: vec![T::zero(); nv],
            third_power: T::one(),
            g1: T::zero(),
            ratio_term: T::zero(),
            report: IdentityReport::default(),
        }
    }

    /// Number of steps seen so far.
    pub fn steps(&self) -> usize {
        self.m
    }

    /// Recomputed `Σ τ_n² (s_{n+1}² − 1) ‖d_t u^n‖²` up to the current step.
    pub fn ratio_term(&self) -> T {
        self.ratio_term
    }

    fn record(&mut self, kind: IdentityKind, residual: T) {
        let r = scalar(residual);
        let m = self.m;
        match self.report.entries.iter_mut().find(|e| e.kind == kind) {
            Some(e) => {
                e.last_step = m;
                if !(r <= e.max_residual) && !e.max_residual.is_nan() {
                    e.max_residual = r;
                    e.worst_step = m;
                }
            }
            None => self.report.entries.push(IdentityEntry {
                kind,
                first_step: m,
                last_step: m,
                worst_step: m,
                max_residual: r,
                threshold: scalar(T::tol_floor(kind.threshold(), 1e3)),
            }),
        }
    }

    /// Compares a logged ratio-term value for the current step with the
    /// recomputed one.
    pub fn check_ratio_term(&mut self, logged: T) {
        self.record(IdentityKind::RatioTerm, (logged - self.ratio_term).abs());
    }

    pub fn push(&mut self, u: &NodalField<T>, tau: T) {
        assert_eq!(u.len(), self.current.len());
        self.m += 1;
        let m = self.m;
        let ops = self.ops;
        let delta = u.diff_scaled(&self.current, T::one());
        let dtu = delta.scaled(T::one() / tau);
        let delta_sq = delta.norms_sq();
        let u_sq = u.norms_sq();
        if m == 1 {
            self.delta1_sq = delta_sq.clone();
        }
        if let Some(tp) = self.tau_prev {
            self.steps_nonincreasing &= tau <= tp;
        }
        if let (Some(dprev), Some(tp)) = (&self.dtu_prev, self.tau_prev) {
            self.ratio_term += (tau * tau - tp * tp) * ops.l2_norm_sq(dprev);
        }
        let energy = ops.energy(u);
        let half = T::lit(0.5);

        match self.family {
            Family::ThetaMu { theta, mu } => {
                let weight = if m == 1 { half } else { theta - half };
                self.dissipation +=
                    tau * ops.inner_product_star(self.metric, &dtu, &dtu) + weight * tau * tau * ops.grad_norm_sq(&dtu);
                let e = relative(energy + self.dissipation - self.energy0, self.energy0);
                self.record(IdentityKind::Energy, e);

                if let (Some(dprev), Some(tp)) = (&self.dtu_prev, self.tau_prev) {
                    for z in 0..u.len() {
                        let dp = dprev[z];
                        self.acc_ratio[z] += (tp * tp - tau * tau) * vec3::norm_sq(&dp);
                        self.acc_d2[z] += tau * tau * vec3::norm_sq(&vec3::sub(&dtu[z], &dp));
                        self.acc_d1[z] += delta_sq[z];
                    }
                }
                let two = T::lit(2.0);
                let worst = (0..u.len())
                    .map(|z| {
                        let rhs = mu * delta_sq[z]
                            + (T::one() - mu) * self.delta1_sq[z]
                            + mu * (self.acc_ratio[z] + self.acc_d2[z])
                            + (T::one() - two * mu) * self.acc_d1[z];
                        (u_sq[z] - self.u0_norm_sq[z] - rhs).abs()
                    })
                    .fold(T::zero(), T::max);
                self.record(IdentityKind::ConstraintVertexwise, worst);

                if mu <= half && self.steps_nonincreasing {
                    let min_norm = u_sq.iter().map(|s| s.sqrt()).fold(T::infinity(), T::min);
                    self.record(IdentityKind::Sign, (T::one() - min_norm).max(T::zero()));
                }
                if theta >= half {
                    let rise = relative((energy - self.energy_prev).max(T::zero()), self.energy0);
                    self.record(IdentityKind::EnergyDecrease, rise);
                }
            }
            Family::Bdf2 => {
                let grad_inner = |a: &NodalField<T>, b: &NodalField<T>| ops.stiffness.quad_form(a, b);
                let g_norm = |a: &NodalField<T>, b: &NodalField<T>| {
                    T::lit(1.25) * grad_inner(a, a) - grad_inner(a, b) + T::lit(0.25) * grad_inner(b, b)
                };
                if m == 1 {
                    // Euler start
                    self.dissipation = tau * ops.inner_product_star(self.metric, &dtu, &dtu)
                        + half * tau * tau * ops.grad_norm_sq(&dtu);
                    self.record(IdentityKind::Energy, relative(energy + self.dissipation - self.energy0, self.energy0));
                    self.g1 = g_norm(u, &self.current);
                    self.dissipation = T::zero();
                } else {
                    let prev2 = self.previous.as_ref().expect("two previous iterates");
                    let second = NodalField::lin_comb(T::one(), u, -T::lit(2.0), &self.current).add_scaled(T::one(), prev2);
                    let udot = NodalField::lin_comb(T::lit(3.0), u, -T::lit(4.0), &self.current)
                        .add_scaled(T::one(), prev2)
                        .scaled(T::one() / (T::lit(2.0) * tau));
                    self.dissipation += tau * ops.inner_product_star(self.metric, &udot, &udot)
                        + T::lit(0.25) * ops.grad_norm_sq(&second);
                    let g = g_norm(u, &self.current);
                    self.record(IdentityKind::GEnergy, relative(g + self.dissipation - self.g1, self.g1));

                    let third = T::one() / T::lit(3.0);
                    for (z, x) in second.norms_sq().into_iter().enumerate() {
                        self.second_diff_sum[z] += x;
                        self.second_diff_weighted[z] = (self.second_diff_weighted[z] + x) * third;
                    }
                }
                self.third_power /= T::lit(3.0);
                let c = T::lit(1.5);
                let (mut lhs, mut rhs) = (T::zero(), T::zero());
                for z in 0..u.len() {
                    let w = self.lumped[z];
                    lhs += w * (u_sq[z] - self.u0_norm_sq[z]);
                    rhs += w
                        * (c * (T::one() - self.third_power) * self.delta1_sq[z]
                            + c * (self.second_diff_sum[z] - self.second_diff_weighted[z]));
                }
                self.record(IdentityKind::ConstraintL1, relative(lhs - rhs, rhs));

                let drop = self
                    .current
                    .iter()
                    .zip(u.iter())
                    .map(|(a, b)| vec3::norm(a) - vec3::norm(b))
                    .fold(T::zero(), T::max);
                self.record(IdentityKind::NormMonotone, drop);
            }
        }

        self.energy_prev = energy;
        self.previous = Some(std::mem::replace(&mut self.current, u.clone()));
        self.dtu_prev = Some(dtu);
        self.tau_prev = Some(tau);
    }

    pub fn report(&self) -> &IdentityReport {
        &self.report
    }

    pub fn finish(self) -> IdentityReport {
        self.report
    }
}

/// Runs every applicable identity over `u⁰ = fields[0], …` with step sizes
/// `taus[m-1]` for `u^m`.
pub fn verify_identities<T: Real>(
    kind: &SchemeKind<T>,
    metric: Metric,
    ops: &FemOperators<T>,
    fields: &[NodalField<T>],
    taus: &[T],
) -> IdentityReport {
    assert_eq!(fields.len(), taus.len() + 1, "one step size per step");
    let mut tracker = IdentityTracker::new(kind, metric, ops, &fields[0]);
    for (u, &tau) in fields[1..].iter().zip(taus) {
        tracker.push(u, tau);
    }
    tracker.finish()
}
