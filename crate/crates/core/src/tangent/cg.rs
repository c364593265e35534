use crate::error::SolverError;
use crate::scalar::Real;

#[derive(Debug)]
pub(crate) struct CgOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub relative_residual: T,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
///
/// Stops when `‖r‖ ≤ tol ‖b‖` (Euclidean norm of the recursive residual).
pub(crate) fn pcg<T: Real>(
    apply: impl Fn(&[T], &mut [T]),
    b: &[T],
    inv_diag: &[T],
    tol: T,
    max_iter: usize,
) -> Result<CgOutcome<T>, SolverError> {
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == T::zero() {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            relative_residual: T::zero(),
        });
    }

    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(inv_diag).map(|(ri, di)| *ri * *di).collect();
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let mut res = T::one();

    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(SolverError::NotConverged {
                iterations: it,
                residual: res.to_f64().unwrap_or(f64::NAN),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / b_norm;
        if res <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                relative_residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::NotConverged {
        iterations: max_iter,
        residual: res.to_f64().unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        let n = 50;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = 3.0 * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1];
                }
                y[i] = s;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let out = pcg(apply, &b, &vec![1.0 / 3.0; n], 1e-13, 500).unwrap();
        let mut y = vec![0.0; n];
        apply(&out.x, &mut y);
        let err = y.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-11);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let out = pcg(|x: &[f64], y: &mut [f64]| y.copy_from_slice(x), &[0.0; 4], &[1.0; 4], 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn iteration_cap_reported() {
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..x.len() {
                y[i] = (i + 1) as f64 * x[i];
            }
        };
        let err = pcg(apply, &[1.0; 8], &[1.0; 8], 1e-14, 2).unwrap_err();
        assert!(matches!(err, SolverError::NotConverged { iterations: 2, .. }));
    }
}
