//! Richardson iterative refinement around an approximate solver.

use crate::scalar::{norm_inf, Scalar};

/// Outcome of a refinement loop.
#[derive(Debug, Clone, Copy)]
pub struct RefineReport<T> {
    /// Correction solves performed beyond the initial one.
    pub iterations: usize,
    pub final_residual: T,
    pub converged: bool,
    /// Residual grew on two consecutive iterations; best iterate returned.
    pub diverged: bool,
}

/// Iterates `x <- x + F^{-1} (b - A x)` until the residual drops below
/// `tol_abs + tol_rel * ||b||_inf`, stalls, or `max_iters` is reached.
///
/// `apply_a` must be the exact residual operator, which may differ from the
/// matrix behind `solve` (e.g. an unreduced system refined through a
/// condensed factorization). Returns the refined solution and a report.
pub fn richardson_refine<T, A, S>(
    apply_a: A,
    solve: S,
    b: &[T],
    tol_abs: T,
    tol_rel: T,
    max_iters: usize,
) -> (Vec<T>, RefineReport<T>)
where
    T: Scalar,
    A: FnMut(&[T], &mut [T]),
    S: FnMut(&[T], &mut [T]),
{
    richardson_refine_from(None, apply_a, solve, b, tol_abs, tol_rel, max_iters)
}

/// [`richardson_refine`] continuing from an already-computed solution
/// instead of performing the initial solve.
pub fn richardson_refine_from<T, A, S>(
    x0: Option<Vec<T>>,
    mut apply_a: A,
    mut solve: S,
    b: &[T],
    tol_abs: T,
    tol_rel: T,
    max_iters: usize,
) -> (Vec<T>, RefineReport<T>)
where
    T: Scalar,
    A: FnMut(&[T], &mut [T]),
    S: FnMut(&[T], &mut [T]),
{
    let n = b.len();
    let threshold = tol_abs + tol_rel * norm_inf(b);
    let mut x = vec![T::zero(); n];
    if x0.is_none() && norm_inf(b) <= threshold {
        return (
            x,
            RefineReport {
                iterations: 0,
                final_residual: norm_inf(b),
                converged: true,
                diverged: false,
            },
        );
    }

    let mut correction = vec![T::zero(); n];
    match x0 {
        Some(start) => {
            debug_assert_eq!(start.len(), n);
            x = start;
        }
        None => {
            solve(b, &mut correction);
            x.copy_from_slice(&correction);
        }
    }

    let mut ax = vec![T::zero(); n];
    let mut residual = vec![T::zero(); n];
    let mut best = x.clone();
    let mut best_norm = T::infinity();
    let mut prev_norm = T::infinity();
    let mut growth_streak = 0usize;

    let mut iterations = 0;
    loop {
        apply_a(&x, &mut ax);
        for i in 0..n {
            residual[i] = b[i] - ax[i];
        }
        let rnorm = norm_inf(&residual);
        if rnorm < best_norm {
            best_norm = rnorm;
            best.copy_from_slice(&x);
        }
        if rnorm <= threshold {
            return (
                x,
                RefineReport {
                    iterations,
                    final_residual: rnorm,
                    converged: true,
                    diverged: false,
                },
            );
        }
        if rnorm >= prev_norm {
            growth_streak += 1;
            if growth_streak >= 2 {
                return (
                    best,
                    RefineReport {
                        iterations,
                        final_residual: best_norm,
                        converged: false,
                        diverged: true,
                    },
                );
            }
        } else {
            growth_streak = 0;
        }
        if iterations >= max_iters {
            return (
                best,
                RefineReport {
                    iterations,
                    final_residual: best_norm,
                    converged: false,
                    diverged: false,
                },
            );
        }
        prev_norm = rnorm;
        solve(&residual, &mut correction);
        for i in 0..n {
            x[i] += correction[i];
        }
        iterations += 1;
    }
}
