//! Null-space solve of the linearized step problem on the discrete tangent
//! space `{v : v(z)·a(z) = 0 at every free vertex z, v = 0 on Γ_D}`.
//!
//! Each free vertex contributes two unknowns, the coefficients of the
//! orthonormal pair `t₁(z), t₂(z)` spanning the plane orthogonal to the
//! anchor `a(z)`. The reduced operator `Bᵀ (M_⋆ + c K) B` is SPD and solved
//! by Jacobi-preconditioned CG; since `|t₁| = |t₂| = 1` its diagonal equals
//! the diagonal of `M_⋆ + c K` at the corresponding vertex.

mod cg;

use crate::error::SolverError;
use crate::fem::{FemOperators, Metric, NodalField, SparseOperator};
use crate::scalar::{vec3, Real};

/// Anchors with `|a| ≤ DEGENERATE_ANCHOR` are rejected.
pub const DEGENERATE_ANCHOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Relative residual target for the reduced system.
    pub tol: T,
    /// Iteration cap is `max_iter_factor` times the reduced dimension.
    pub max_iter_factor: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::tol_floor(1e-12, 1e3),
            max_iter_factor: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TangentBasis<T> {
    free: Vec<usize>,
    anchors: Vec<[T; 3]>,
    t1: Vec<[T; 3]>,
    t2: Vec<[T; 3]>,
}

/// Orthonormal pair orthogonal to `a`: project the canonical axis with the
/// smallest `|n_k|` and complete with a cross product.
fn tangent_pair<T: Real>(a: &[T; 3]) -> ([T; 3], [T; 3]) {
    let n = vec3::scale(a, T::one() / vec3::norm(a));
    let k = (0..3)
        .min_by(|&i, &j| n[i].abs().partial_cmp(&n[j].abs()).expect("finite anchor"))
        .expect("three axes");
    let mut e = [T::zero(); 3];
    e[k] = T::one();
    let proj = vec3::sub(&e, &vec3::scale(&n, n[k]));
    let t1 = vec3::scale(&proj, T::one() / vec3::norm(&proj));
    let t2 = vec3::cross(&n, &t1);
    (t1, t2)
}

pub fn build_tangent_basis<T: Real>(anchor: &NodalField<T>, free: &[usize]) -> Result<TangentBasis<T>, SolverError> {
    let eps = T::lit(DEGENERATE_ANCHOR);
    let mut anchors = Vec::with_capacity(free.len());
    let mut t1 = Vec::with_capacity(free.len());
    let mut t2 = Vec::with_capacity(free.len());
    for &z in free {
        let a = anchor[z];
        let norm = vec3::norm(&a);
        if !(norm > eps) {
            return Err(SolverError::DegenerateAnchor {
                vertex: z,
                norm: norm.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (p, q) = tangent_pair(&a);
        anchors.push(a);
        t1.push(p);
        t2.push(q);
    }
    Ok(TangentBasis {
        free: free.to_vec(),
        anchors,
        t1,
        t2,
    })
}

impl<T: Real> TangentBasis<T> {
    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    /// Number of reduced unknowns (`2 × #free`).
    pub fn reduced_dim(&self) -> usize {
        2 * self.free.len()
    }

    pub fn anchor(&self, k: usize) -> [T; 3] {
        self.anchors[k]
    }

    pub fn directions(&self, k: usize) -> ([T; 3], [T; 3]) {
        (self.t1[k], self.t2[k])
    }

    /// `B p`: field with `t₁ p₂ₖ + t₂ p₂ₖ₊₁` at the k-th free vertex, zero elsewhere.
    pub fn inject(&self, p: &[T], num_vertices: usize) -> NodalField<T> {
        let mut w = NodalField::zeros(num_vertices);
        self.inject_into(p, w.values_mut());
        w
    }

    fn inject_into(&self, p: &[T], out: &mut [[T; 3]]) {
        for (k, &z) in self.free.iter().enumerate() {
            let (a, b) = (p[2 * k], p[2 * k + 1]);
            let (s, t) = (self.t1[k], self.t2[k]);
            out[z] = [a * s[0] + b * t[0], a * s[1] + b * t[1], a * s[2] + b * t[2]];
        }
    }

    /// `Bᵀ f`.
    pub fn restrict(&self, f: &NodalField<T>) -> Vec<T> {
        let mut r = vec![T::zero(); self.reduced_dim()];
        self.restrict_into(f.values(), &mut r);
        r
    }

    fn restrict_into(&self, f: &[[T; 3]], out: &mut [T]) {
        for (k, &z) in self.free.iter().enumerate() {
            out[2 * k] = vec3::dot(&self.t1[k], &f[z]);
            out[2 * k + 1] = vec3::dot(&self.t2[k], &f[z]);
        }
    }
}

/// `M_⋆ + coeff · K`.
pub fn system_operator<T: Real>(ops: &FemOperators<T>, metric: Metric, coeff: T) -> SparseOperator<T> {
    match metric {
        Metric::H1 => SparseOperator::combine(T::one() + coeff, &ops.stiffness, T::zero(), &ops.stiffness),
        Metric::L2 => SparseOperator::combine(T::one(), &ops.mass, coeff, &ops.stiffness),
    }
}

/// Matrix-free reduced operator `Bᵀ A B`.
pub struct ReducedOperator<'a, T> {
    system: SparseOperator<T>,
    basis: &'a TangentBasis<T>,
}

impl<'a, T: Real> ReducedOperator<'a, T> {
    pub fn new(ops: &FemOperators<T>, metric: Metric, coeff: T, basis: &'a TangentBasis<T>) -> Self {
        Self {
            system: system_operator(ops, metric, coeff),
            basis,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.reduced_dim()
    }

    pub fn apply(&self, p: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.apply_into(p, &mut out);
        out
    }

    fn apply_into(&self, p: &[T], out: &mut [T]) {
        let w = self.basis.inject(p, self.system.dim());
        let aw = self.system.apply_field(&w);
        self.basis.restrict_into(aw.values(), out);
    }

    fn inverse_diagonal(&self) -> Vec<T> {
        let diag = self.system.diagonal();
        self.basis
            .free
            .iter()
            .flat_map(|&z| {
                let d = T::one() / diag[z];
                [d, d]
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct TangentSolution<T> {
    /// Update `w` (zero at Dirichlet vertices, tangent at free ones).
    pub update: NodalField<T>,
    pub iterations: usize,
    pub relative_residual: T,
}

/// Finds `w` in the tangent space with
/// `(w, v)_⋆ + coeff (∇w, ∇v) = rhs(v)` for all tangent `v`, where `rhs`
/// holds the load evaluated against every nodal shape function.
pub fn solve_step<T: Real>(
    metric: Metric,
    coeff: T,
    ops: &FemOperators<T>,
    rhs: &NodalField<T>,
    basis: &TangentBasis<T>,
    opts: &SolverOptions<T>,
) -> Result<TangentSolution<T>, SolverError> {
    let op = ReducedOperator::new(ops, metric, coeff, basis);
    let b = basis.restrict(rhs);
    let max_iter = (opts.max_iter_factor * op.dim()).max(1);
    let out = cg::pcg(
        |p, y| op.apply_into(p, y),
        &b,
        &op.inverse_diagonal(),
        opts.tol,
        max_iter,
    )?;
    Ok(TangentSolution {
        update: basis.inject(&out.x, rhs.len()),
        iterations: out.iterations,
        relative_residual: out.relative_residual,
    })
}
