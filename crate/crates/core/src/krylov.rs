//! Operator-based conjugate gradient.

use crate::scalar::{dot, norm_two, Scalar};

/// Matrix-free symmetric positive definite operator.
///
/// Symmetry and positive definiteness are the caller's contract; `apply`
/// must be deterministic for fixed inputs.
pub trait LinearOperator<T> {
    fn dim(&self) -> usize;
    /// `y = S x`.
    fn apply(&self, x: &[T], y: &mut [T]);
}

/// Convenience operator backed by a closure.
pub struct FnOperator<F> {
    pub dim: usize,
    pub f: F,
}

impl<T, F: Fn(&[T], &mut [T])> LinearOperator<T> for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgReport<T> {
    pub iterations: usize,
    pub final_residual_norm: T,
    pub converged: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CgError {
    #[error("cg breakdown at iteration {iteration}: non-finite value encountered")]
    Breakdown { iteration: usize },
}

/// Unpreconditioned conjugate gradient on `S y = b`.
///
/// Stops when `||b - S y||_2 <= tol_abs + tol_rel * ||b||_2`, or after
/// `max_iters` iterations with `converged = false` in the report.
pub fn cg_solve<T: Scalar, S: LinearOperator<T> + ?Sized>(
    op: &S,
    b: &[T],
    tol_abs: T,
    tol_rel: T,
    max_iters: usize,
) -> Result<(Vec<T>, CgReport<T>), CgError> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    let threshold = tol_abs + tol_rel * norm_two(b);

    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut rnorm = norm_two(&r);
    if rnorm <= threshold {
        return Ok((
            x,
            CgReport {
                iterations: 0,
                final_residual_norm: rnorm,
                converged: true,
            },
        ));
    }
    let mut p = r.clone();
    let mut sp = vec![T::zero(); n];
    let mut rs_old = dot(&r, &r);

    for iteration in 1..=max_iters {
        op.apply(&p, &mut sp);
        let psp = dot(&p, &sp);
        if !psp.is_finite() || psp == T::zero() {
            return Err(CgError::Breakdown { iteration });
        }
        let alpha = rs_old / psp;
        if !alpha.is_finite() {
            return Err(CgError::Breakdown { iteration });
        }
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * sp[i];
        }
        let rs_new = dot(&r, &r);
        if !rs_new.is_finite() {
            return Err(CgError::Breakdown { iteration });
        }
        rnorm = rs_new.sqrt();
        if rnorm <= threshold {
            return Ok((
                x,
                CgReport {
                    iterations: iteration,
                    final_residual_norm: rnorm,
                    converged: true,
                },
            ));
        }
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }

    Ok((
        x,
        CgReport {
            iterations: max_iters,
            final_residual_norm: rnorm,
            converged: false,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct DiagOp(Vec<f64>);
    impl LinearOperator<f64> for DiagOp {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..x.len() {
                y[i] = self.0[i] * x[i];
            }
        }
    }

    #[test]
    fn identity_one_iteration() {
        let op = DiagOp(vec![1.0; 5]);
        let b = [1.0, -2.0, 3.0, 0.0, 0.5];
        let (y, report) = cg_solve(&op, &b, 1e-14, 0.0, 10).unwrap();
        assert_eq!(report.iterations, 1);
        for i in 0..5 {
            assert!((y[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn diag_exact_in_n_steps() {
        let op = DiagOp(vec![1.0, 2.0, 3.0]);
        let (y, report) = cg_solve(&op, &[1.0, 2.0, 3.0], 1e-13, 0.0, 10).unwrap();
        assert!(report.iterations <= 3);
        assert!(report.converged);
        for yi in y {
            assert!((yi - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn two_distinct_eigenvalues_two_iterations() {
        // Krylov theory: iteration count bounded by the number of distinct
        // eigenvalues. Spectrum {1, 10} on n = 10.
        let mut d = vec![1.0; 10];
        for di in d.iter_mut().skip(5) {
            *di = 10.0;
        }
        let op = DiagOp(d);
        let b: Vec<f64> = (0..10).map(|i| (i as f64) - 4.5).collect();
        let (_, report) = cg_solve(&op, &b, 1e-12, 0.0, 10).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 2);
    }

    #[test]
    fn finite_termination_distinct_eigenvalue_bound() {
        // Constructed spectra with k distinct eigenvalues, n = 20.
        for k in 1..=5usize {
            let d: Vec<f64> = (0..20).map(|i| 1.0 + (i % k) as f64).collect();
            let op = DiagOp(d);
            let b: Vec<f64> = (0..20).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
            let (_, report) = cg_solve(&op, &b, 1e-13, 0.0, 40).unwrap();
            assert!(report.converged);
            assert!(
                report.iterations <= k,
                "k={k} iterations={}",
                report.iterations
            );
        }
    }

    #[test]
    fn breakdown_on_nonfinite() {
        struct NanOp;
        impl LinearOperator<f64> for NanOp {
            fn dim(&self) -> usize {
                2
            }
            fn apply(&self, _x: &[f64], y: &mut [f64]) {
                y[0] = f64::NAN;
                y[1] = 0.0;
            }
        }
        let err = cg_solve(&NanOp, &[1.0, 1.0], 1e-12, 0.0, 5).unwrap_err();
        assert!(matches!(err, CgError::Breakdown { iteration: 1 }));
    }
}
