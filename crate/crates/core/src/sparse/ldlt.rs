//! Numeric pivoting-free LDL^T factorization.
//!
//! Up-looking simplicial factorization over a fixed symbolic plan. Pivots
//! are taken in plan order (no numerical pivoting); an exactly zero pivot
//! with downstream dependence is recorded and skipped so the caller can
//! regularize and refactorize instead of aborting.

use crate::scalar::Scalar;
use crate::sparse::symbolic::{SymbolicPlan, NONE};
use crate::sparse::{SparseError, SparseSymCsc};

/// Eigenvalue sign counts `(positive, negative, zero)` of the factored matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.zero
    }
}

/// Numeric LDL^T factor: `P A P^T = L D L^T` with unit lower triangular `L`.
///
/// `L` is stored strictly lower triangular in CSC; the unit diagonal is
/// implicit. Columns of the stored pattern follow the symbolic plan exactly.
#[derive(Debug, Clone)]
pub struct LdltFactor<T> {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    etree: Vec<usize>,
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    l_values: Vec<T>,
    d: Vec<T>,
    d_scale: Vec<T>,
    inertia: Inertia,
    pivot_floor: T,
    zero_pivots: Vec<usize>,
}

impl<T: Scalar> LdltFactor<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn etree(&self) -> &[usize] {
        &self.etree
    }

    /// Diagonal of `D`, in permuted order.
    pub fn d(&self) -> &[T] {
        &self.d
    }

    pub fn l_col_ptr(&self) -> &[usize] {
        &self.l_col_ptr
    }

    pub fn l_row_idx(&self) -> &[usize] {
        &self.l_row_idx
    }

    pub fn l_values(&self) -> &[T] {
        &self.l_values
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    /// Columns whose pivot was exactly zero while later columns depended on
    /// them. Empty for a successful factorization.
    pub fn zero_pivots(&self) -> &[usize] {
        &self.zero_pivots
    }

    /// Whether the pivot of permuted column `j` was classified as zero in
    /// the inertia (absolute floor or cancellation of its forming terms).
    pub fn pivot_is_zero(&self, j: usize) -> bool {
        self.d[j].abs() <= self.pivot_floor || self.d[j].abs() <= T::cst(1e-14) * self.d_scale[j]
    }

    pub fn is_nonsingular(&self) -> bool {
        self.zero_pivots.is_empty() && self.d.iter().all(|&d| d != T::zero())
    }

    /// Smallest |d| among pivots (0 if any pivot is zero).
    pub fn min_abs_pivot(&self) -> T {
        self.d
            .iter()
            .fold(T::infinity(), |acc, &d| acc.min(d.abs()))
    }

    /// Solves `A x = b` through forward sweep, diagonal scale, backward sweep.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, SparseError> {
        let mut x = vec![T::zero(); self.n];
        self.solve_into(b, &mut x)?;
        Ok(x)
    }

    pub fn solve_into(&self, b: &[T], x: &mut [T]) -> Result<(), SparseError> {
        assert_eq!(b.len(), self.n);
        assert_eq!(x.len(), self.n);
        if let Some(&col) = self.zero_pivots.first() {
            return Err(SparseError::SingularSolve { col });
        }
        // y = P b
        let mut y = vec![T::zero(); self.n];
        for k in 0..self.n {
            y[k] = b[self.perm[k]];
        }
        // L z = y (unit diagonal)
        for j in 0..self.n {
            let yj = y[j];
            if yj != T::zero() {
                for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                    y[self.l_row_idx[p]] -= self.l_values[p] * yj;
                }
            }
        }
        // D w = z
        for j in 0..self.n {
            let d = self.d[j];
            if d == T::zero() {
                return Err(SparseError::SingularSolve { col: j });
            }
            y[j] = y[j] / d;
        }
        // L^T v = w
        for j in (0..self.n).rev() {
            let mut acc = y[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                acc -= self.l_values[p] * y[self.l_row_idx[p]];
            }
            y[j] = acc;
        }
        // x = P^T v
        for k in 0..self.n {
            x[self.perm[k]] = y[k];
        }
        Ok(())
    }
}

/// Factorizes `A` over `plan`, counting pivots with `|d| <= pivot_floor`
/// as zero eigenvalues in the inertia.
pub fn ldlt_factorize<T: Scalar>(
    a: &SparseSymCsc<T>,
    plan: &SymbolicPlan,
    pivot_floor: T,
) -> LdltFactor<T> {
    let n = plan.n;
    assert_eq!(a.dim(), n, "matrix/plan dimension mismatch");
    assert_eq!(
        a.nnz(),
        plan.up_from_orig.len(),
        "matrix structure differs from plan"
    );

    let l_nnz = plan.l_row_idx.len();
    let mut l_values = vec![T::zero(); l_nnz];
    let mut d = vec![T::zero(); n];
    let mut d_scale = vec![T::zero(); n];
    let mut zero_pivots = Vec::new();

    // Next insertion slot per column of L; ends equal to l_col_ptr[j+1].
    let mut fill = plan.l_col_ptr[..n].to_vec();
    let mut y = vec![T::zero(); n];
    let mut marker = vec![NONE; n];
    let mut reach = vec![0usize; n];
    let mut path = vec![0usize; n];
    let a_values = a.values();

    for i in 0..n {
        // Scatter row i of the permuted matrix into the workspace.
        let mut di = T::zero();
        let mut di_scale = T::zero();
        let mut top = 0usize;
        marker[i] = i;
        for p in plan.up_col_ptr[i]..plan.up_col_ptr[i + 1] {
            let k = plan.up_row_idx[p];
            let v = a_values[plan.up_from_orig[p]];
            if k == i {
                di += v;
                di_scale += v.abs();
                continue;
            }
            y[k] += v;
            // Walk the elimination tree, stacking each new path segment so
            // that popping processes dependencies first.
            let mut j = k;
            let mut len = 0usize;
            while j != NONE && j < i && marker[j] != i {
                marker[j] = i;
                path[len] = j;
                len += 1;
                j = plan.etree[j];
            }
            while len > 0 {
                len -= 1;
                reach[top] = path[len];
                top += 1;
            }
        }

        // Sparse triangular solve: process the reach last-segment-first.
        while top > 0 {
            top -= 1;
            let j = reach[top];
            let wj = y[j];
            y[j] = T::zero();
            for p in plan.l_col_ptr[j]..fill[j] {
                y[plan.l_row_idx[p]] -= l_values[p] * wj;
            }
            let dj = d[j];
            let lij = if dj == T::zero() {
                if !zero_pivots.contains(&j) {
                    zero_pivots.push(j);
                }
                T::zero()
            } else {
                wj / dj
            };
            let update = lij * wj;
            di -= update;
            di_scale += update.abs();
            debug_assert_eq!(plan.l_row_idx[fill[j]], i, "pattern drift");
            l_values[fill[j]] = lij;
            fill[j] += 1;
        }
        d[i] = di;
        d_scale[i] = di_scale;
    }
    debug_assert!(fill.iter().zip(&plan.l_col_ptr[1..]).all(|(f, c)| f == c));

    // A pivot counts as numerically zero against the caller's absolute
    // floor, or when it is pure cancellation of the terms that formed it.
    let cancel = T::cst(1e-14);
    let mut inertia = Inertia {
        positive: 0,
        negative: 0,
        zero: 0,
    };
    for (&di, &scale) in d.iter().zip(&d_scale) {
        if di.abs() <= pivot_floor || di.abs() <= cancel * scale {
            inertia.zero += 1;
        } else if di > T::zero() {
            inertia.positive += 1;
        } else {
            inertia.negative += 1;
        }
    }
    zero_pivots.sort_unstable();

    LdltFactor {
        n,
        perm: plan.perm.clone(),
        iperm: plan.iperm.clone(),
        etree: plan.etree.clone(),
        l_col_ptr: plan.l_col_ptr.clone(),
        l_row_idx: plan.l_row_idx.clone(),
        l_values,
        d,
        d_scale,
        inertia,
        pivot_floor,
        zero_pivots,
    }
}

/// Relative pivot floor used across the solver: `1e-12 * max |diag(A)|`.
pub fn default_pivot_floor<T: Scalar>(a: &SparseSymCsc<T>) -> T {
    T::cst(1e-12) * a.max_abs_diag().max(T::one())
}

/// Solves `A x = b` with a previously computed factorization.
pub fn ldlt_solve<T: Scalar>(factor: &LdltFactor<T>, b: &[T]) -> Result<Vec<T>, SparseError> {
    factor.solve(b)
}

impl<T: Scalar> LdltFactor<T> {
    /// Dense `P A P^T` reconstruction `L D L^T` (row-major), for checks.
    pub fn reconstruct_dense(&self) -> Vec<T> {
        let n = self.n;
        // Dense unit-lower L.
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            l[j * n + j] = T::one();
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                l[self.l_row_idx[p] * n + j] = self.l_values[p];
            }
        }
        let mut out = vec![T::zero(); n * n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = T::zero();
                for k in 0..n {
                    acc += l[r * n + k] * self.d[k] * l[c * n + k];
                }
                out[r * n + c] = acc;
            }
        }
        out
    }

    /// Permuted-order position of an original index.
    pub fn permuted_index(&self, orig: usize) -> usize {
        self.iperm[orig]
    }

    pub fn pivot_floor(&self) -> T {
        self.pivot_floor
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::order::identity_order;
    use crate::sparse::{amd_order, csc_from_triplets, symbolic_analyze};

    fn factor<T: Scalar>(a: &SparseSymCsc<T>, perm: &[usize]) -> LdltFactor<T> {
        let plan = symbolic_analyze(a, perm);
        ldlt_factorize(a, &plan, default_pivot_floor(a))
    }

    #[test]
    fn identity_inertia() {
        let a = csc_from_triplets(3, &[(0, 0, 1.0f64), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        let f = factor(&a, &identity_order(3));
        assert_eq!(f.d(), &[1.0, 1.0, 1.0]);
        assert_eq!(
            f.inertia(),
            Inertia {
                positive: 3,
                negative: 0,
                zero: 0
            }
        );
    }

    #[test]
    fn diagonal_sign_counts() {
        let a = csc_from_triplets(3, &[(0, 0, 2.0f64), (1, 1, -3.0), (2, 2, 0.0)]).unwrap();
        let f = factor(&a, &identity_order(3));
        assert_eq!(
            f.inertia(),
            Inertia {
                positive: 1,
                negative: 1,
                zero: 1
            }
        );
        assert!(f.zero_pivots().is_empty(), "no downstream dependence");
    }

    #[test]
    fn spd_reconstruction() {
        // A = M^T M + I for a fixed 6x6 M, checked against the dense oracle.
        let n = 6;
        let mut m = vec![0.0f64; n * n];
        let mut state = 12345u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / ((1u64 << 31) as f64) - 0.5
        };
        for v in m.iter_mut() {
            *v = next();
        }
        let mut entries = Vec::new();
        for r in 0..n {
            for c in 0..=r {
                let mut acc = if r == c { 1.0 } else { 0.0 };
                for k in 0..n {
                    acc += m[k * n + r] * m[k * n + c];
                }
                entries.push((r, c, acc));
            }
        }
        let a = csc_from_triplets(n, &entries).unwrap();
        let f = factor(&a, &amd_order(&a));
        assert_eq!(f.inertia().positive, n);

        let rec = f.reconstruct_dense();
        let ad = a.to_dense();
        let norm_a = a.norm_inf();
        for pr in 0..n {
            for pc in 0..n {
                let orig = ad[f.perm()[pr] * n + f.perm()[pc]];
                assert!(
                    (rec[pr * n + pc] - orig).abs() <= 1e-12 * norm_a,
                    "reconstruction off at ({pr}, {pc})"
                );
            }
        }
    }

    #[test]
    fn solve_identity_and_diag() {
        let a = csc_from_triplets(3, &[(0, 0, 1.0f64), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        let f = factor(&a, &identity_order(3));
        assert_eq!(f.solve(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);

        let a = csc_from_triplets(2, &[(0, 0, 2.0f64), (1, 1, 4.0)]).unwrap();
        let f = factor(&a, &identity_order(2));
        assert_eq!(f.solve(&[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn solve_residual_random_spd() {
        let n = 8;
        let mut state = 777u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / ((1u64 << 31) as f64) - 0.5
        };
        let mut m = vec![0.0f64; n * n];
        for v in m.iter_mut() {
            *v = next();
        }
        let mut entries = Vec::new();
        for r in 0..n {
            for c in 0..=r {
                let mut acc = if r == c { 1.0 } else { 0.0 };
                for k in 0..n {
                    acc += m[k * n + r] * m[k * n + c];
                }
                entries.push((r, c, acc));
            }
        }
        let a = csc_from_triplets(n, &entries).unwrap();
        let f = factor(&a, &amd_order(&a));
        let b: Vec<f64> = (0..n).map(|_| next()).collect();
        let x = f.solve(&b).unwrap();
        let mut ax = vec![0.0; n];
        a.mul_vec(&x, &mut ax);
        let resid = ax
            .iter()
            .zip(&b)
            .map(|(axi, bi)| (axi - bi).abs())
            .fold(0.0f64, f64::max);
        let bound = 1e-10
            * (a.norm_inf() * x.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
                + b.iter().fold(0.0f64, |m, &v| m.max(v.abs())));
        assert!(resid <= bound, "residual {resid} above bound {bound}");
    }

    #[test]
    fn zero_pivot_reported() {
        // First pivot is exactly zero and column 0 has a downstream entry.
        let a = csc_from_triplets(2, &[(0, 0, 0.0f64), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let f = factor(&a, &identity_order(2));
        assert_eq!(f.zero_pivots(), &[0]);
        assert!(f.solve(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn permutation_invariance_of_solve() {
        let entries = vec![
            (0usize, 0usize, 4.0f64),
            (1, 1, 5.0),
            (2, 2, 6.0),
            (3, 3, 7.0),
            (1, 0, 1.0),
            (2, 1, 1.0),
            (3, 0, 0.5),
        ];
        let a = csc_from_triplets(4, &entries).unwrap();
        let b = [1.0, -2.0, 3.0, 0.5];
        let x1 = factor(&a, &identity_order(4)).solve(&b).unwrap();
        let x2 = factor(&a, &amd_order(&a)).solve(&b).unwrap();
        let x3 = factor(&a, &[3, 1, 0, 2]).solve(&b).unwrap();
        for i in 0..4 {
            assert!((x1[i] - x2[i]).abs() <= 1e-10 * x1[i].abs().max(1.0));
            assert!((x1[i] - x3[i]).abs() <= 1e-10 * x1[i].abs().max(1.0));
        }
    }

    #[test]
    fn f32_instantiation() {
        let a = csc_from_triplets(2, &[(0, 0, 4.0f32), (1, 0, 1.0), (1, 1, 3.0)]).unwrap();
        let f = factor(&a, &identity_order(2));
        let x = f.solve(&[5.0f32, 4.0]).unwrap();
        let mut ax = vec![0.0f32; 2];
        a.mul_vec(&x, &mut ax);
        assert!((ax[0] - 5.0).abs() < 1e-4 && (ax[1] - 4.0).abs() < 1e-4);
    }
}
