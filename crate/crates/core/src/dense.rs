//! Small dense kit backing the oracle paths and the diagnostics module.
//!
//! Row-major storage, partial-pivot LU for the reference solves. None of
//! this is on the solver's hot path; it exists so desk-scale cross-checks
//! stay independent of the sparse kernels.

use crate::scalar::Scalar;

/// `y = A x` for a row-major `rows x cols` matrix.
pub fn mul_vec<T: Scalar>(a: &[T], rows: usize, cols: usize, x: &[T], y: &mut [T]) {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(y.len(), rows);
    for r in 0..rows {
        let row = &a[r * cols..(r + 1) * cols];
        let mut acc = T::zero();
        for c in 0..cols {
            acc += row[c] * x[c];
        }
        y[r] = acc;
    }
}

/// `y = A^T x` for a row-major `rows x cols` matrix.
pub fn mul_vec_t<T: Scalar>(a: &[T], rows: usize, cols: usize, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), rows);
    debug_assert_eq!(y.len(), cols);
    y.iter_mut().for_each(|v| *v = T::zero());
    for r in 0..rows {
        let row = &a[r * cols..(r + 1) * cols];
        let xr = x[r];
        for c in 0..cols {
            y[c] += row[c] * xr;
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("dense system is singular at pivot {pivot}")]
pub struct DenseSingular {
    pub pivot: usize,
}

/// Partial-pivot LU factorization of a square row-major matrix.
pub struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> DenseLu<T> {
    pub fn factor(a: &[T], n: usize) -> Result<Self, DenseSingular> {
        debug_assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_val = lu[k * n + k].abs();
            for r in (k + 1)..n {
                let v = lu[r * n + k].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if pivot_val == T::zero() {
                return Err(DenseSingular { pivot: k });
            }
            if pivot_row != k {
                for c in 0..n {
                    lu.swap(k * n + c, pivot_row * n + c);
                }
                piv.swap(k, pivot_row);
            }
            let pivot = lu[k * n + k];
            for r in (k + 1)..n {
                let factor = lu[r * n + k] / pivot;
                lu[r * n + k] = factor;
                for c in (k + 1)..n {
                    let u = lu[k * n + c];
                    lu[r * n + c] = lu[r * n + c] - factor * u;
                }
            }
        }
        Ok(Self { n, lu, piv })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[T], x: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
    }
}

/// Maximum absolute asymmetry `max |A - A^T|` of a square matrix.
pub fn asymmetry<T: Scalar>(a: &[T], n: usize) -> T {
    let mut worst = T::zero();
    for r in 0..n {
        for c in 0..r {
            worst = worst.max((a[r * n + c] - a[c * n + r]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        // [[2, 1], [1, 3]] x = [5, 10] -> x = [1, 3]
        let a = [2.0f64, 1.0, 1.0, 3.0];
        let lu = DenseLu::factor(&a, 2).unwrap();
        let x = lu.solve(&[5.0, 10.0]);
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lu_pivots_zero_diagonal() {
        // Leading zero forces a row swap.
        let a = [0.0f64, 1.0, 1.0, 0.0];
        let lu = DenseLu::factor(&a, 2).unwrap();
        let x = lu.solve(&[2.0, 3.0]);
        assert!((x[0] - 3.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lu_detects_singular() {
        let a = [1.0f64, 2.0, 2.0, 4.0];
        assert!(DenseLu::factor(&a, 2).is_err());
    }
}
