//! P1 finite-element operators on a [`Mesh`].
//!
//! Vector fields are handled component-wise: every operator is a scalar
//! `V×V` matrix applied to each of the three components.

mod field;
mod sparse;

use std::fmt;
use std::str::FromStr;

pub use field::NodalField;
pub use sparse::SparseOperator;

use crate::error::{FemError, MeshError};
use crate::mesh::Mesh;
use crate::scalar::Real;

/// Inner product `(·,·)_⋆` defining the gradient flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    L2,
    H1,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L2 => "l2",
            Metric::H1 => "h1",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Metric::L2),
            "h1" => Ok(Metric::H1),
            other => Err(format!("unknown metric `{other}` (expected l2 or h1)")),
        }
    }
}

/// Per-vertex neighbour lists (including the vertex itself), sorted.
fn vertex_pattern<T: Real>(mesh: &Mesh<T>) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); mesh.num_vertices()];
    for t in mesh.triangles() {
        for &a in t {
            rows[a].extend_from_slice(t);
        }
    }
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
    }
    rows
}

/// Area and barycentric gradients of triangle `t`.
fn element_geometry<T: Real>(mesh: &Mesh<T>, t: usize) -> Result<(T, [[T; 2]; 3]), FemError> {
    let tri = mesh.triangles()[t];
    let v = mesh.vertices();
    let (p0, p1, p2) = (v[tri[0]], v[tri[1]], v[tri[2]]);
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    if !(det > T::zero()) {
        return Err(FemError::Degenerate(t));
    }
    let grads = [
        [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
        [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
    ];
    Ok((det * T::lit(0.5), grads))
}

/// Scalar stiffness matrix `K[i,j] = ∫ ∇φ_i · ∇φ_j`.
pub fn assemble_stiffness<T: Real>(mesh: &Mesh<T>) -> Result<SparseOperator<T>, FemError> {
    let mut k = SparseOperator::from_pattern(&vertex_pattern(mesh));
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (area, g) = element_geometry(mesh, t)?;
        for a in 0..3 {
            for b in 0..3 {
                let kab = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                k.add_to(tri[a], tri[b], kab);
            }
        }
    }
    Ok(k)
}

/// Consistent mass `∫ φ_i φ_j`, or its row-sum lumped diagonal.
pub fn assemble_mass<T: Real>(mesh: &Mesh<T>, lumped: bool) -> Result<SparseOperator<T>, FemError> {
    if lumped {
        let mut diag = vec![T::zero(); mesh.num_vertices()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let (area, _) = element_geometry(mesh, t)?;
            for &a in tri {
                diag[a] += area / T::lit(3.0);
            }
        }
        return Ok(SparseOperator::diagonal_matrix(diag));
    }
    let mut m = SparseOperator::from_pattern(&vertex_pattern(mesh));
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (area, _) = element_geometry(mesh, t)?;
        let off = area / T::lit(12.0);
        let diag = area / T::lit(6.0);
        for a in 0..3 {
            for b in 0..3 {
                m.add_to(tri[a], tri[b], if a == b { diag } else { off });
            }
        }
    }
    Ok(m)
}

/// `values[z] = f(vertex z)`.
pub fn nodal_interpolate<T: Real>(
    mesh: &Mesh<T>,
    f: impl Fn([T; 2]) -> [T; 3],
) -> Result<NodalField<T>, FemError> {
    mesh.vertices()
        .iter()
        .enumerate()
        .map(|(z, &x)| {
            let v = f(x);
            if v.iter().all(|c| c.is_finite()) {
                Ok(v)
            } else {
                Err(FemError::NonFinite(z))
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map(NodalField::from_vec)
}

/// `I[u] = ½ Σ_c u_cᵀ K u_c`.
pub fn dirichlet_energy<T: Real>(u: &NodalField<T>, stiffness: &SparseOperator<T>) -> T {
    stiffness.quad_form(u, u) * T::lit(0.5)
}

/// The stiffness, consistent mass and lumped mass of one mesh.
#[derive(Debug, Clone)]
pub struct FemOperators<T> {
    pub stiffness: SparseOperator<T>,
    pub mass: SparseOperator<T>,
    pub lumped_mass: SparseOperator<T>,
}

impl<T: Real> FemOperators<T> {
    pub fn assemble(mesh: &Mesh<T>) -> Result<Self, FemError> {
        Ok(Self {
            stiffness: assemble_stiffness(mesh)?,
            mass: assemble_mass(mesh, false)?,
            lumped_mass: assemble_mass(mesh, true)?,
        })
    }

    /// Gram matrix of `(·,·)_⋆` (consistent mass for L²).
    pub fn metric_operator(&self, metric: Metric) -> &SparseOperator<T> {
        match metric {
            Metric::L2 => &self.mass,
            Metric::H1 => &self.stiffness,
        }
    }

    pub fn inner_product_star(&self, metric: Metric, u: &NodalField<T>, v: &NodalField<T>) -> T {
        self.metric_operator(metric).quad_form(u, v)
    }

    pub fn norm_star(&self, metric: Metric, u: &NodalField<T>) -> T {
        self.inner_product_star(metric, u, u).max(T::zero()).sqrt()
    }

    pub fn energy(&self, u: &NodalField<T>) -> T {
        dirichlet_energy(u, &self.stiffness)
    }

    /// `‖∇u‖²`.
    pub fn grad_norm_sq(&self, u: &NodalField<T>) -> T {
        self.stiffness.quad_form(u, u)
    }

    /// `‖u‖²` with the consistent mass.
    pub fn l2_norm_sq(&self, u: &NodalField<T>) -> T {
        self.mass.quad_form(u, u)
    }

    /// `‖u‖²` with vertex quadrature.
    pub fn lumped_l2_norm_sq(&self, u: &NodalField<T>) -> T {
        self.lumped_mass.quad_form(u, u)
    }
}

/// A mesh together with its assembled operators and the free (non-Dirichlet)
/// vertex list.
#[derive(Debug, Clone)]
pub struct Discretization<T> {
    mesh: Mesh<T>,
    ops: FemOperators<T>,
    free: Vec<usize>,
}

impl<T: Real> Discretization<T> {
    /// Dirichlet boundary is the whole of `∂Ω`.
    pub fn new(mesh: Mesh<T>) -> Result<Self, FemError> {
        let free = mesh.free_vertices();
        Self::with_free_vertices(mesh, free)
    }

    pub fn with_free_vertices(mesh: Mesh<T>, free: Vec<usize>) -> Result<Self, FemError> {
        let ops = FemOperators::assemble(&mesh)?;
        Ok(Self { mesh, ops, free })
    }

    pub fn structured(n: usize) -> Result<Self, MeshError> {
        let mesh = Mesh::structured(n)?;
        Self::new(mesh).map_err(|e| MeshError::InvalidArgument(e.to_string()))
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn ops(&self) -> &FemOperators<T> {
        &self.ops
    }

    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn interpolate(&self, f: impl Fn([T; 2]) -> [T; 3]) -> Result<NodalField<T>, FemError> {
        nodal_interpolate(&self.mesh, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(n: usize) -> (Mesh<f64>, FemOperators<f64>) {
        let m = Mesh::structured(n).unwrap();
        let o = FemOperators::assemble(&m).unwrap();
        (m, o)
    }

    #[test]
    fn stiffness_kills_constants() {
        let (_, o) = ops(5);
        let r = o.stiffness.apply(&vec![1.0; 36]);
        let scale = o.stiffness.max_abs();
        assert!(r.iter().all(|x| x.abs() <= 1e-12 * scale));
    }

    #[test]
    fn stiffness_unit_cell_corner() {
        let (_, o) = ops(1);
        assert!((o.stiffness.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stiffness_energy_of_linear_function() {
        let (m, o) = ops(4);
        let u = nodal_interpolate(&m, |x| [x[0], 0.0, 0.0]).unwrap();
        assert!((o.stiffness.quad_form(&u, &u) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn mass_sums_to_area() {
        let (_, o) = ops(7);
        assert!((o.mass.entry_sum() - 1.0).abs() < 1e-12);
        assert!((o.lumped_mass.entry_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lumped_interior_vertex() {
        let (_, o) = ops(2);
        // vertex 4 is the centre of the 3x3 grid
        assert!((o.lumped_mass.get(4, 4) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn symmetric_exactly() {
        let (_, o) = ops(9);
        assert!(o.stiffness.is_symmetric());
        assert!(o.mass.is_symmetric());
    }

    #[test]
    fn interpolation_reports_non_finite_vertex() {
        let m = Mesh::<f64>::structured(2).unwrap();
        let err = nodal_interpolate(&m, |x| if x == [0.0, 0.0] { [f64::NAN, 0.0, 0.0] } else { [0.0; 3] }).unwrap_err();
        assert!(matches!(err, FemError::NonFinite(4)));
    }

    #[test]
    fn energy_and_star_norms() {
        let (m, o) = ops(4);
        let c = NodalField::constant(m.num_vertices(), [0.0, 0.0, 1.0]);
        assert_eq!(o.energy(&c), 0.0);
        assert_eq!(o.norm_star(Metric::H1, &c), 0.0);
        assert_eq!(o.norm_star(Metric::L2, &NodalField::zeros(25)), 0.0);
        let e1 = NodalField::constant(m.num_vertices(), [1.0, 0.0, 0.0]);
        assert!((o.inner_product_star(Metric::L2, &e1, &e1) - 1.0).abs() < 1e-14);

        let u = nodal_interpolate(&m, |x| [x[0] * x[1], x[0], 1.0 - x[1] * x[1]]).unwrap();
        let e = o.energy(&u);
        assert!((o.energy(&u.scaled(2.0)) - 4.0 * e).abs() < 1e-14);
        assert!((o.norm_star(Metric::L2, &u).powi(2) - o.l2_norm_sq(&u)).abs() < 1e-14);
    }

    #[test]
    fn metric_parse() {
        assert_eq!("H1".parse::<Metric>().unwrap(), Metric::H1);
        assert_eq!("l2".parse::<Metric>().unwrap(), Metric::L2);
        assert!("h2".parse::<Metric>().is_err());
    }
}
