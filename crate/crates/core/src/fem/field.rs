use std::ops::Index;

use crate::scalar::{vec3, Real};

/// ℝ³-valued P1 function, one 3-vector per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField<T>(Vec<[T; 3]>);

impl<T: Real> NodalField<T> {
    pub fn zeros(n: usize) -> Self {
        Self(vec![[T::zero(); 3]; n])
    }

    pub fn constant(n: usize, value: [T; 3]) -> Self {
        Self(vec![value; n])
    }

    pub fn from_vec(values: Vec<[T; 3]>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[[T; 3]] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [[T; 3]] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<[T; 3]> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, [T; 3]> {
        self.0.iter()
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: T, other: &Self) -> Self {
        self.zip_map(other, |a, b| [a[0] + alpha * b[0], a[1] + alpha * b[1], a[2] + alpha * b[2]])
    }

    /// `(self - other) * s`.
    pub fn diff_scaled(&self, other: &Self, s: T) -> Self {
        self.zip_map(other, |a, b| vec3::scale(&vec3::sub(a, b), s))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self(self.0.iter().map(|a| vec3::scale(a, s)).collect())
    }

    /// `a * self + b * other`.
    pub fn lin_comb(a: T, x: &Self, b: T, y: &Self) -> Self {
        x.zip_map(y, |p, q| [a * p[0] + b * q[0], a * p[1] + b * q[1], a * p[2] + b * q[2]])
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&[T; 3], &[T; 3]) -> [T; 3]) -> Self {
        assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| f(a, b)).collect())
    }

    /// Pointwise squared Euclidean lengths.
    pub fn norms_sq(&self) -> Vec<T> {
        self.0.iter().map(vec3::norm_sq).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
            .fold(T::zero(), T::max)
    }
}

impl<T> Index<usize> for NodalField<T> {
    type Output = [T; 3];

    fn index(&self, i: usize) -> &[T; 3] {
        &self.0[i]
    }
}
