//! Conforming triangulations of the square `(-1/2, 1/2)²`.
//!
//! Text format (whitespace separated, `#` starts a comment):
//!
//! ```text
//! V T
//! x y        # V vertex lines
//! i j k      # T triangle lines, 0-based vertex indices
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::MeshError;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    vertices: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    h: T,
}

impl<T: Real> Mesh<T> {
    /// Validates connectivity and builds the mesh.
    ///
    /// Clockwise triangles are reoriented; boundary vertices are the
    /// endpoints of edges with exactly one incident triangle.
    pub fn new(vertices: Vec<[T; 2]>, mut triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &i in tri.iter() {
                if i >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index: i,
                        vertices: nv,
                    });
                }
            }
            let area2 = signed_area2(&vertices, tri);
            if !(area2.abs() > T::zero()) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::ZeroArea(t));
            }
            if area2 < T::zero() {
                tri.swap(1, 2);
            }
        }

        let mut edges: Vec<(usize, usize)> = triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();

        let mut boundary = vec![false; nv];
        let mut h = T::zero();
        let mut k = 0;
        while k < edges.len() {
            let e = edges[k];
            let mut count = 1;
            while k + count < edges.len() && edges[k + count] == e {
                count += 1;
            }
            if count > 2 {
                return Err(MeshError::NonConforming(e.0, e.1, count));
            }
            if count == 1 {
                boundary[e.0] = true;
                boundary[e.1] = true;
            }
            let (p, q) = (vertices[e.0], vertices[e.1]);
            h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
            k += count;
        }

        Ok(Self {
            vertices,
            triangles,
            boundary,
            h,
        })
    }

    /// Uniform `(n+1)×(n+1)` grid on `[-1/2, 1/2]²`, each cell split along
    /// its lower-left to upper-right diagonal.
    pub fn structured(n: usize) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::InvalidArgument("structured mesh needs n >= 1".into()));
        }
        let half = T::lit(0.5);
        let nt = T::from_usize_lossy(n);
        let coord = |i: usize| T::from_usize_lossy(i) / nt - half;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([coord(i), coord(j)]);
            }
        }
        let idx = |i: usize, j: usize| i + j * (n + 1);
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Self::new(vertices, triangles)
    }

    pub fn parse(text: &str) -> Result<Self, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or(MeshError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let counts: Vec<usize> = parse_fields(hline, header, 2)?;
        let (nv, nt) = (counts[0], counts[1]);

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or(MeshError::Parse {
                line: 0,
                msg: format!("expected {nv} vertex lines"),
            })?;
            let xy: Vec<T> = parse_fields(ln, l, 2)?;
            vertices.push([xy[0], xy[1]]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = lines.next().ok_or(MeshError::Parse {
                line: 0,
                msg: format!("expected {nt} triangle lines"),
            })?;
            let ijk: Vec<usize> = parse_fields(ln, l, 3)?;
            triangles.push([ijk[0], ijk[1], ijk[2]]);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(MeshError::Parse {
                line: ln,
                msg: "trailing content after triangles".into(),
            });
        }
        Self::new(vertices, triangles)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes with shortest round-trip float formatting.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Longest edge length.
    pub fn mesh_size(&self) -> T {
        self.h
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&v| self.boundary[v]).collect()
    }

    /// Vertices not on the Dirichlet boundary (`Γ_D = ∂Ω`).
    pub fn free_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&v| !self.boundary[v]).collect()
    }

    pub fn triangle_area(&self, t: usize) -> T {
        signed_area2(&self.vertices, &self.triangles[t]) * T::lit(0.5)
    }
}

fn signed_area2<T: Real>(v: &[[T; 2]], t: &[usize; 3]) -> T {
    let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

fn parse_fields<F: std::str::FromStr>(line: usize, text: &str, n: usize) -> Result<Vec<F>, MeshError> {
    let out: Vec<F> = text
        .split_whitespace()
        .map(|w| {
            w.parse::<F>().map_err(|_| MeshError::Parse {
                line,
                msg: format!("cannot parse `{w}`"),
            })
        })
        .collect::<Result<_, _>>()?;
    if out.len() != n {
        return Err(MeshError::Parse {
            line,
            msg: format!("expected {n} fields, found {}", out.len()),
        });
    }
    Ok(out)
}
