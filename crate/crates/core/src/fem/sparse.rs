use std::io::Write;

use crate::fem::NodalField;
use crate::scalar::Real;

/// Square sparse matrix in compressed-row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SparseOperator<T> {
    /// Zero matrix with the given row patterns (each row sorted, deduplicated).
    pub(crate) fn from_pattern(rows: &[Vec<usize>]) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let values = vec![T::zero(); col_idx.len()];
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn diagonal_matrix(diag: Vec<T>) -> Self {
        let n = diag.len();
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag,
        }
    }

    pub(crate) fn add_to(&mut self, i: usize, j: usize, v: T) {
        let pos = self.position(i, j).expect("entry in sparsity pattern");
        self.values[pos] += v;
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry `(i, j)`, zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> T {
        self.position(i, j).map_or(T::zero(), |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn entry_sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.position(j, i).is_some_and(|p| self.values[p] == v)))
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// Applies the scalar operator to each of the three components.
    pub fn apply_field(&self, u: &NodalField<T>) -> NodalField<T> {
        assert_eq!(u.len(), self.n);
        let vals = u.values();
        NodalField::from_vec(
            (0..self.n)
                .map(|i| {
                    let mut acc = [T::zero(); 3];
                    for (j, a) in self.row(i) {
                        let x = vals[j];
                        acc[0] += a * x[0];
                        acc[1] += a * x[1];
                        acc[2] += a * x[2];
                    }
                    acc
                })
                .collect(),
        )
    }

    /// `Σ_c u_cᵀ A v_c`.
    pub fn quad_form(&self, u: &NodalField<T>, v: &NodalField<T>) -> T {
        assert_eq!(u.len(), self.n);
        assert_eq!(v.len(), self.n);
        let (uv, vv) = (u.values(), v.values());
        (0..self.n)
            .map(|i| {
                let mut acc = [T::zero(); 3];
                for (j, a) in self.row(i) {
                    acc[0] += a * vv[j][0];
                    acc[1] += a * vv[j][1];
                    acc[2] += a * vv[j][2];
                }
                uv[i][0] * acc[0] + uv[i][1] * acc[1] + uv[i][2] * acc[2]
            })
            .sum()
    }

    /// `alpha * A + beta * B`; patterns are merged.
    pub fn combine(alpha: T, a: &Self, beta: T, b: &Self) -> Self {
        assert_eq!(a.n, b.n);
        let n = a.n;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(a.nnz().max(b.nnz()));
        let mut values = Vec::with_capacity(a.nnz().max(b.nnz()));
        row_ptr.push(0);
        for i in 0..n {
            let mut ra = a.row(i).peekable();
            let mut rb = b.row(i).peekable();
            loop {
                match (ra.peek().copied(), rb.peek().copied()) {
                    (Some((ja, va)), Some((jb, vb))) if ja == jb => {
                        col_idx.push(ja);
                        values.push(alpha * va + beta * vb);
                        ra.next();
                        rb.next();
                    }
                    (Some((ja, va)), Some((jb, _))) if ja < jb => {
                        col_idx.push(ja);
                        values.push(alpha * va);
                        ra.next();
                    }
                    (Some((ja, va)), None) => {
                        col_idx.push(ja);
                        values.push(alpha * va);
                        ra.next();
                    }
                    (_, Some((jb, vb))) => {
                        col_idx.push(jb);
                        values.push(beta * vb);
                        rb.next();
                    }
                    (None, None) => break,
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// MatrixMarket coordinate dump (1-based, general).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}
