//! Dense symmetric eigenvalue tooling and spectrum experiments.
//!
//! Verifies at desk scale that the regularized condensed matrix splits into
//! a large eigenvalue cluster carried by the active Jacobian's row space and
//! an O(1) cluster on its null space, that the Schur complement eigenvalues
//! cluster at `1/gamma`, and that perturbations of the condensed system
//! barely move the computed step despite the large condition number.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{asymmetry, mul_vec_t};
use crate::ipm::duality_measure;
use crate::kkt::{CondensedAssembler, Iterate, KktEval};
use crate::nlp::NlpProblem;
use crate::scalar::{norm_two, Scalar};
use crate::sparse::{
    amd_order, default_pivot_floor, ldlt_factorize, symbolic_analyze, Inertia, SparseSymCsc,
};

/// Dimension cap for every dense experiment here.
pub const DENSE_DIM_CAP: usize = 400;

#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("matrix asymmetry {asymmetry:e} exceeds the symmetric contract")]
    NotSymmetric { asymmetry: f64 },
    #[error("dense diagnostics capped at dimension {cap}, got {dim}")]
    TooLarge { dim: usize, cap: usize },
    #[error("jacobi sweep limit reached before off-diagonal target")]
    NoConvergence,
    #[error("matrix must be positive definite for this experiment")]
    Indefinite,
    #[error(transparent)]
    Sparse(#[from] crate::sparse::SparseError),
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations,
/// sorted descending. Off-diagonal mass is reduced below
/// `tol * ||A||_F`.
pub fn jacobi_eigenvalues<T: Scalar>(
    a: &[T],
    n: usize,
    tol: T,
) -> Result<Vec<T>, DiagnosticsError> {
    Ok(jacobi_eigen(a, n, tol, false)?.0)
}

/// As [`jacobi_eigenvalues`], optionally accumulating eigenvectors
/// (returned row-major: column k pairs with eigenvalue k).
pub fn jacobi_eigen<T: Scalar>(
    a: &[T],
    n: usize,
    tol: T,
    want_vectors: bool,
) -> Result<(Vec<T>, Option<Vec<T>>), DiagnosticsError> {
    if n > DENSE_DIM_CAP {
        return Err(DiagnosticsError::TooLarge {
            dim: n,
            cap: DENSE_DIM_CAP,
        });
    }
    debug_assert_eq!(a.len(), n * n);
    let asym = asymmetry(a, n);
    let scale = a.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if asym > T::cst(1e-12) * scale.max(T::one()) {
        return Err(DiagnosticsError::NotSymmetric {
            asymmetry: asym.as_f64(),
        });
    }

    let mut m = a.to_vec();
    // Symmetrize roundoff-level asymmetry so rotations stay exact.
    for r in 0..n {
        for c in 0..r {
            let avg = (m[r * n + c] + m[c * n + r]) * T::cst(0.5);
            m[r * n + c] = avg;
            m[c * n + r] = avg;
        }
    }
    let mut vectors = if want_vectors {
        let mut v = vec![T::zero(); n * n];
        for i in 0..n {
            v[i * n + i] = T::one();
        }
        Some(v)
    } else {
        None
    };

    let frob = m.iter().map(|&v| v * v).sum::<T>().sqrt();
    let target = tol * frob;
    let off = |m: &[T]| -> T {
        let mut acc = T::zero();
        for r in 0..n {
            for c in 0..r {
                acc += m[r * n + c] * m[r * n + c];
            }
        }
        (acc + acc).sqrt()
    };

    let mut converged = frob == T::zero();
    for _sweep in 0..60 {
        if off(&m) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (T::cst(2.0) * apq);
                let t = {
                    let sign = if tau >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    sign / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = (T::one() + t * t).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                if let Some(v) = vectors.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    if !converged && off(&m) > target {
        return Err(DiagnosticsError::NoConvergence);
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evs: Vec<T> = (0..n).map(|i| m[i * n + i]).collect();
    order.sort_by(|&a, &b| evs[b].partial_cmp(&evs[a]).unwrap());
    let sorted: Vec<T> = order.iter().map(|&i| evs[i]).collect();
    let sorted_vectors = vectors.map(|v| {
        let mut out = vec![T::zero(); n * n];
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                out[r * n + new_col] = v[r * n + old_col];
            }
        }
        out
    });
    Ok((sorted, sorted_vectors))
}

/// Sign counts of an eigenvalue list with `|lambda| <= floor` as zero.
pub fn inertia_from_eigenvalues<T: Scalar>(eigenvalues: &[T], floor: T) -> Inertia {
    let mut inertia = Inertia {
        positive: 0,
        negative: 0,
        zero: 0,
    };
    for &ev in eigenvalues {
        if ev.abs() <= floor {
            inertia.zero += 1;
        } else if ev > T::zero() {
            inertia.positive += 1;
        } else {
            inertia.negative += 1;
        }
    }
    inertia
}

/// Inequalities estimated active at the current iterate by the rule
/// `s_i <= theta * sqrt(duality measure)`.
#[derive(Debug, Clone)]
pub struct ActiveSetEstimate {
    pub active: Vec<usize>,
    pub inactive: Vec<usize>,
}

impl ActiveSetEstimate {
    pub fn m_a(&self) -> usize {
        self.active.len()
    }

    pub fn estimate<T: Scalar>(it: &Iterate<T>, bounded: &[bool], theta: T) -> Self {
        let xi = duality_measure(it, bounded);
        let threshold = theta * xi.max(T::zero()).sqrt();
        let mut active = Vec::new();
        let mut inactive = Vec::new();
        for (i, &si) in it.s.iter().enumerate() {
            if si <= threshold {
                active.push(i);
            } else {
                inactive.push(i);
            }
        }
        Self { active, inactive }
    }
}

/// Spectrum statistics of the regularized condensed matrix at an iterate.
#[derive(Debug, Clone)]
pub struct SpectrumReport<T> {
    /// Eigenvalues sorted descending by magnitude.
    pub eigenvalues: Vec<T>,
    /// Estimated size of the large cluster: equalities plus active
    /// inequalities.
    pub ell: usize,
    /// `min(1/duality, gamma)`.
    pub sigma_lo: T,
    /// `max(1/s_min, gamma)` with `s_min` over the estimated active set.
    pub sigma_hi: T,
    /// `|lambda_1| / |lambda_n|`.
    pub kappa2: T,
    /// `|lambda_ell| / |lambda_{ell+1}|` when `0 < ell < n`.
    pub gap_ratio: Option<T>,
    pub gamma: T,
    pub duality: T,
}

impl<T: Scalar> SpectrumReport<T> {
    /// CSV row matching [`SpectrumReport::CSV_HEADER`].
    pub fn csv_row(&self, cg_iters: usize) -> String {
        let n = self.eigenvalues.len();
        let at = |i: usize| -> f64 {
            if i == 0 || i > n {
                f64::NAN
            } else {
                self.eigenvalues[i - 1].as_f64()
            }
        };
        format!(
            "{:e},{:e},{},{:e},{:e},{:e},{:e},{:e},{}",
            self.gamma.as_f64(),
            self.duality.as_f64(),
            self.ell,
            at(1),
            at(self.ell),
            at(self.ell + 1),
            at(n),
            self.kappa2.as_f64(),
            cg_iters
        )
    }

    pub const CSV_HEADER: &'static str =
        "gamma,duality,ell,lambda_1,lambda_ell,lambda_ell_plus_1,lambda_n,kappa2,cg_iters";
}

/// Densifies `K_gamma` at `it` and reports its cluster structure.
pub fn spectrum_report<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
    gamma: T,
) -> Result<SpectrumReport<T>, DiagnosticsError> {
    let n = problem.n();
    if n > DENSE_DIM_CAP {
        return Err(DiagnosticsError::TooLarge {
            dim: n,
            cap: DENSE_DIM_CAP,
        });
    }
    let eval = KktEval::new(problem, it);
    let mut assembler = CondensedAssembler::new(problem, true);
    let blocks = assembler.assemble(&eval, it, gamma);
    let dense = blocks.k.to_dense();
    let mut eigenvalues = jacobi_eigenvalues(&dense, n, T::cst(1e-14))?;
    eigenvalues.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());

    let xi = duality_measure(it, problem.bounded());
    let active = ActiveSetEstimate::estimate(it, problem.bounded(), T::one());
    let ell = problem.m_e() + active.m_a();

    let s_min_active = active
        .active
        .iter()
        .map(|&i| it.s[i])
        .fold(T::infinity(), |m, v| m.min(v));
    let inv_smin = if s_min_active.is_finite() {
        s_min_active.recip()
    } else {
        T::zero()
    };
    let inv_xi = if xi > T::zero() {
        xi.recip()
    } else {
        T::infinity()
    };
    let sigma_lo = inv_xi.min(gamma);
    let sigma_hi = inv_smin.max(gamma);

    let kappa2 = if ell == n && n > 0 {
        // Degenerate split: every direction is constrained, so the report
        // conditions the large cluster alone.
        eigenvalues[0].abs() / eigenvalues[ell - 1].abs()
    } else {
        eigenvalues[0].abs() / eigenvalues[n - 1].abs()
    };
    let gap_ratio = if ell > 0 && ell < n {
        Some(eigenvalues[ell - 1].abs() / eigenvalues[ell].abs())
    } else {
        None
    };

    Ok(SpectrumReport {
        eigenvalues,
        ell,
        sigma_lo,
        sigma_hi,
        kappa2,
        gap_ratio,
        gamma,
        duality: xi,
    })
}

/// Eigenvalues of the Schur complement `G K_gamma^{-1} G^T`, built
/// column-by-column with the sparse factorization.
pub fn schur_spectrum<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
    gamma: T,
) -> Result<Vec<T>, DiagnosticsError> {
    let m_e = problem.m_e();
    if m_e > DENSE_DIM_CAP {
        return Err(DiagnosticsError::TooLarge {
            dim: m_e,
            cap: DENSE_DIM_CAP,
        });
    }
    if m_e == 0 {
        return Ok(Vec::new());
    }
    let n = problem.n();
    let eval = KktEval::new(problem, it);
    let mut assembler = CondensedAssembler::new(problem, true);
    let blocks = assembler.assemble(&eval, it, gamma);
    let perm = amd_order(&blocks.k);
    let plan = symbolic_analyze(&blocks.k, &perm);
    let factor = ldlt_factorize(&blocks.k, &plan, default_pivot_floor(&blocks.k));
    let inertia = factor.inertia();
    if inertia.negative > 0 || inertia.zero > 0 {
        return Err(DiagnosticsError::Indefinite);
    }

    let g = problem.jac_eq_dense(&it.x);
    let mut schur = vec![T::zero(); m_e * m_e];
    let mut gt_col = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    for r in 0..m_e {
        for i in 0..n {
            gt_col[i] = g[r * n + i];
        }
        factor.solve_into(&gt_col, &mut w)?;
        for row in 0..m_e {
            let mut acc = T::zero();
            for i in 0..n {
                acc += g[row * n + i] * w[i];
            }
            schur[row * m_e + r] = acc;
        }
    }
    // Symmetrize the solve roundoff before the eigensolver's strict check.
    for r in 0..m_e {
        for c in 0..r {
            let avg = (schur[r * m_e + c] + schur[c * m_e + r]) * T::cst(0.5);
            schur[r * m_e + c] = avg;
            schur[c * m_e + r] = avg;
        }
    }
    jacobi_eigenvalues(&schur, m_e, T::cst(1e-14))
}

/// Observed step sensitivity of the condensed solve under random relative
/// perturbations, against the classical `kappa2 * noise` bound.
#[derive(Debug, Clone)]
pub struct PerturbationReport<T> {
    pub noise_scale: T,
    pub kappa2: T,
    /// Relative error of dx under matrix + rhs perturbation.
    pub step_error_rel: T,
    /// `kappa2 * noise_scale`.
    pub naive_bound: T,
    /// Relative error of dx under rhs-only perturbation.
    pub rhs_only_error_rel: T,
    /// Components of the rhs-only error inside / orthogonal to the row
    /// space of the active Jacobian (relative to the step norm).
    pub rhs_error_in_range: T,
    pub rhs_error_in_null: T,
}

/// Injects relative noise of magnitude `noise_scale` into the regularized
/// condensed matrix and right-hand side and measures the step error.
pub fn perturbation_probe<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
    gamma: T,
    noise_scale: T,
    seed: u64,
) -> Result<PerturbationReport<T>, DiagnosticsError> {
    let n = problem.n();
    if n > DENSE_DIM_CAP {
        return Err(DiagnosticsError::TooLarge {
            dim: n,
            cap: DENSE_DIM_CAP,
        });
    }
    let eval = KktEval::new(problem, it);
    let mut assembler = CondensedAssembler::new(problem, true);
    let blocks = assembler.assemble(&eval, it, gamma);
    let rhs = crate::kkt::build_rhs_from_eval(&eval, it);

    // Nominal condensed right-hand side and solve (no refinement: the probe
    // measures the raw sensitivity of one solve).
    let mut s_gamma = rhs.rbar1.clone();
    if problem.m_e() > 0 {
        let mut gt = vec![T::zero(); n];
        eval.apply_jac_eq_t(&rhs.rbar2, &mut gt);
        for i in 0..n {
            s_gamma[i] += gamma * gt[i];
        }
    }
    let solve_with = |k: &SparseSymCsc<T>, b: &[T]| -> Result<Vec<T>, DiagnosticsError> {
        let perm = amd_order(k);
        let plan = symbolic_analyze(k, &perm);
        let factor = ldlt_factorize(k, &plan, default_pivot_floor(k));
        if factor.inertia().negative > 0 || factor.inertia().zero > 0 {
            return Err(DiagnosticsError::Indefinite);
        }
        Ok(factor.solve(b)?)
    };
    let dx0 = solve_with(&blocks.k, &s_gamma)?;
    let dx0_norm = norm_two(&dx0).max(T::cst(1e-300));

    let dense = blocks.k.to_dense();
    let eigenvalues = jacobi_eigenvalues(&dense, n, T::cst(1e-13))?;
    let kappa2 = eigenvalues[0].abs() / eigenvalues[n - 1].abs();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = |v: T, rng: &mut ChaCha8Rng| {
        let eta: f64 = rng.gen_range(-1.0..1.0);
        v * (T::one() + noise_scale * T::cst(eta))
    };

    // Matrix + rhs perturbation.
    let mut k_pert = blocks.k.clone();
    for v in k_pert.values_mut() {
        let eta: f64 = rng.gen_range(-1.0..1.0);
        *v = *v * (T::one() + noise_scale * T::cst(eta));
    }
    let s_pert: Vec<T> = s_gamma.iter().map(|&v| noisy(v, &mut rng)).collect();
    let dx_pert = solve_with(&k_pert, &s_pert)?;
    let step_error_rel = {
        let diff: Vec<T> = dx_pert.iter().zip(&dx0).map(|(a, b)| *a - *b).collect();
        norm_two(&diff) / dx0_norm
    };

    // RHS-only perturbation.
    let s_pert2: Vec<T> = s_gamma.iter().map(|&v| noisy(v, &mut rng)).collect();
    let dx_rhs = solve_with(&blocks.k, &s_pert2)?;
    let diff_rhs: Vec<T> = dx_rhs.iter().zip(&dx0).map(|(a, b)| *a - *b).collect();
    let rhs_only_error_rel = norm_two(&diff_rhs) / dx0_norm;

    // Split the rhs-only error across the active Jacobian's row space and
    // null space, through the eigenvectors of A^T A.
    let active = ActiveSetEstimate::estimate(it, problem.bounded(), T::one());
    let m_e = problem.m_e();
    let rows = m_e + active.m_a();
    let (range_err, null_err) = if rows == 0 {
        (T::zero(), norm_two(&diff_rhs))
    } else {
        let ge = problem.jac_eq_dense(&it.x);
        let hi = problem.jac_ineq_dense(&it.x);
        let mut a = vec![T::zero(); rows * n];
        a[..m_e * n].copy_from_slice(&ge);
        for (k, &row) in active.active.iter().enumerate() {
            for c in 0..n {
                a[(m_e + k) * n + c] = hi[row * n + c];
            }
        }
        let mut ata = vec![T::zero(); n * n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = T::zero();
                for k in 0..rows {
                    acc += a[k * n + r] * a[k * n + c];
                }
                ata[r * n + c] = acc;
            }
        }
        let (evs, vecs) = jacobi_eigen(&ata, n, T::cst(1e-13), true)?;
        let vecs = vecs.unwrap();
        let rank_tol = evs[0].max(T::cst(1e-300)) * T::cst(1e-10);
        let mut range_sq = T::zero();
        let mut null_sq = T::zero();
        let mut coords = vec![T::zero(); n];
        mul_vec_t(&vecs, n, n, &diff_rhs, &mut coords);
        for (i, &ev) in evs.iter().enumerate() {
            if ev > rank_tol {
                range_sq += coords[i] * coords[i];
            } else {
                null_sq += coords[i] * coords[i];
            }
        }
        (range_sq.sqrt(), null_sq.sqrt())
    };

    Ok(PerturbationReport {
        noise_scale,
        kappa2,
        step_error_rel,
        naive_bound: kappa2 * noise_scale,
        rhs_only_error_rel,
        rhs_error_in_range: range_err / dx0_norm,
        rhs_error_in_null: null_err / dx0_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal() {
        let a = [3.0f64, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        let evs = jacobi_eigenvalues(&a, 3, 1e-14).unwrap();
        assert_eq!(evs, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn jacobi_two_by_two_analytic() {
        let a = [0.0f64, 1.0, 1.0, 0.0];
        let evs = jacobi_eigenvalues(&a, 2, 1e-14).unwrap();
        assert!((evs[0] - 1.0).abs() < 1e-12);
        assert!((evs[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_trace_identity() {
        let n = 10;
        let mut a = vec![0.0f64; n * n];
        let mut state = 42u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / ((1u64 << 31) as f64) - 0.5
        };
        for r in 0..n {
            for c in 0..=r {
                let v = next();
                a[r * n + c] = v;
                a[c * n + r] = v;
            }
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let evs = jacobi_eigenvalues(&a, n, 1e-14).unwrap();
        let sum: f64 = evs.iter().sum();
        assert!((sum - trace).abs() <= 1e-10 * trace.abs().max(1.0));
    }

    #[test]
    fn jacobi_rejects_asymmetry() {
        let a = [1.0f64, 0.5, 0.0, 1.0];
        assert!(matches!(
            jacobi_eigenvalues(&a, 2, 1e-14),
            Err(DiagnosticsError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn jacobi_vectors_reconstruct() {
        let a = [2.0f64, 1.0, 1.0, 3.0];
        let (evs, vecs) = jacobi_eigen(&a, 2, 1e-15, true).unwrap();
        let v = vecs.unwrap();
        // A V = V diag(evs)
        for col in 0..2 {
            for row in 0..2 {
                let av: f64 = (0..2).map(|k| a[row * 2 + k] * v[k * 2 + col]).sum();
                let vl = v[row * 2 + col] * evs[col];
                assert!((av - vl).abs() < 1e-12);
            }
        }
    }
}
