//! Benchmark data on `Ω = (-1/2, 1/2)²`.

pub mod quadrature;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::scalar::Real;

/// Quadrature order used for the cached reference energy.
pub const REFERENCE_QUADRATURE_ORDER: usize = 32;

/// `π_st⁻¹(x) = (|x|²+1)⁻¹ (2x, 1 − |x|²)`, a harmonic map into `S²`.
pub fn inverse_stereographic<T: Real>(x: [T; 2]) -> [T; 3] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let s = T::one() / (r2 + T::one());
    let two = T::lit(2.0);
    [two * x[0] * s, two * x[1] * s, (T::one() - r2) * s]
}

/// `φ(x) = 16 sin(4πx₁)(x₁² − 1/4)(x₂² − 1/4)`; vanishes on `∂Ω`.
pub fn perturbation<T: Real>(x: [T; 2]) -> T {
    let q = T::lit(0.25);
    T::lit(16.0) * (T::lit(4.0) * T::PI() * x[0]).sin() * (x[0] * x[0] - q) * (x[1] * x[1] - q)
}

/// `π_st⁻¹` perturbed by `(φ, −φ, 0)` and renormalized.
pub fn perturbed_stereographic<T: Real>(x: [T; 2]) -> [T; 3] {
    let u = inverse_stereographic(x);
    let phi = perturbation(x);
    if phi == T::zero() {
        return u;
    }
    let v = [u[0] + phi, u[1] - phi, u[2]];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    debug_assert!(n > T::zero());
    [v[0] / n, v[1] / n, v[2] / n]
}

/// `u⁰(x) = |x|⁻¹ (x sin ϕ(2|x|), |x| cos ϕ(2|x|))` with
/// `ϕ(s) = (3π/2) min{s², 1}`, extended by `(0, 0, 1)` at the origin.
pub fn singular_initial<T: Real>(x: [T; 2]) -> [T; 3] {
    let r = x[0].hypot(x[1]);
    if r == T::zero() {
        return [T::zero(), T::zero(), T::one()];
    }
    let s = T::lit(2.0) * r;
    let phi = T::lit(1.5) * T::PI() * (s * s).min(T::one());
    let (sin, cos) = phi.sin_cos();
    [x[0] / r * sin, x[1] / r * sin, cos]
}

/// `4 ∫_Ω (1 + |x|²)⁻² dx` with an `order`-point tensor Gauss rule.
pub fn stereographic_energy_with_order(order: usize) -> f64 {
    quadrature::integrate_square(|x, y| 4.0 / (1.0 + x * x + y * y).powi(2), -0.5, 0.5, order)
}

/// `I[π_st⁻¹]` on Ω.
pub fn reference_energy_stereographic() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| stereographic_energy_with_order(REFERENCE_QUADRATURE_ORDER))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    /// Exact harmonic map as initial value.
    Stereo,
    StereoPerturbed,
    Singular,
}

impl Problem {
    pub const ALL: [Problem; 3] = [Problem::Stereo, Problem::StereoPerturbed, Problem::Singular];

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Stereo => "stereo",
            Problem::StereoPerturbed => "stereo-perturbed",
            Problem::Singular => "singular",
        }
    }

    pub fn initial_value<T: Real>(&self, x: [T; 2]) -> [T; 3] {
        match self {
            Problem::Stereo => inverse_stereographic(x),
            Problem::StereoPerturbed => perturbed_stereographic(x),
            Problem::Singular => singular_initial(x),
        }
    }

    /// Boundary data; coincides with the initial value on `∂Ω`.
    pub fn dirichlet_value<T: Real>(&self, x: [T; 2]) -> [T; 3] {
        self.initial_value(x)
    }

    /// Energy of the limiting harmonic map, where known.
    pub fn reference_energy(&self) -> Option<f64> {
        match self {
            Problem::Stereo | Problem::StereoPerturbed => Some(reference_energy_stereographic()),
            Problem::Singular => None,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Problem::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown problem `{s}` (expected stereo, stereo-perturbed or singular)"))
    }
}
