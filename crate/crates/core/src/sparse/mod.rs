//! Sparse symmetric storage and a pivoting-free LDL^T factorization.
//!
//! Matrices are stored in compressed sparse column form, keeping only the
//! lower triangle (diagonal included) of a symmetric matrix. Indices are
//! 0-based throughout the crate. Row indices inside a column are strictly
//! increasing and no duplicates are allowed; [`csc_from_triplets`] takes
//! care of mirroring upper-triangle entries and summing duplicates.

mod ldlt;
mod order;
mod refine;
mod symbolic;

pub use ldlt::{default_pivot_floor, ldlt_factorize, ldlt_solve, Inertia, LdltFactor};
pub use order::{amd_order, identity_order};
pub use refine::{richardson_refine, richardson_refine_from, RefineReport};
pub use symbolic::{symbolic_analyze, SymbolicPlan};

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::scalar::Scalar;

/// Errors raised by the sparse kernels.
#[derive(Debug, thiserror::Error)]
pub enum SparseError {
    #[error("entry ({row}, {col}) out of range for dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("singular solve: zero pivot in column {col}")]
    SingularSolve { col: usize },
    #[error("matrix market: {msg} (line {line})")]
    MatrixMarket { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Symmetric sparse matrix, lower triangle in compressed sparse column form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymCsc<T> {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseSymCsc<T> {
    /// Builds a matrix from already-validated CSC arrays.
    ///
    /// Debug builds assert the storage invariants; use [`csc_from_triplets`]
    /// for unsorted or duplicated input.
    pub fn from_parts(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>, values: Vec<T>) -> Self {
        debug_assert_eq!(col_ptr.len(), n + 1);
        debug_assert_eq!(*col_ptr.last().unwrap_or(&0), row_idx.len());
        debug_assert_eq!(row_idx.len(), values.len());
        #[cfg(debug_assertions)]
        for c in 0..n {
            let mut prev = None;
            for p in col_ptr[c]..col_ptr[c + 1] {
                let r = row_idx[p];
                debug_assert!(r >= c && r < n, "lower triangle violated at ({r}, {c})");
                if let Some(q) = prev {
                    debug_assert!(r > q, "rows not strictly increasing in column {c}");
                }
                prev = Some(r);
            }
        }
        Self {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Position of entry (row, col) in the value array, if structurally present.
    /// Expects `row >= col` (lower triangle).
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.col_ptr[col];
        let hi = self.col_ptr[col + 1];
        self.row_idx[lo..hi]
            .binary_search(&row)
            .ok()
            .map(|k| lo + k)
    }

    /// Largest absolute diagonal entry (0 when the diagonal is empty).
    pub fn max_abs_diag(&self) -> T {
        let mut m = T::zero();
        for c in 0..self.n {
            if let Some(p) = self.position(c, c) {
                m = m.max(self.values[p].abs());
            }
        }
        m
    }

    /// Infinity norm of the full symmetric matrix.
    pub fn norm_inf(&self) -> T {
        let mut row_sum = vec![T::zero(); self.n];
        for c in 0..self.n {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                let a = self.values[p].abs();
                row_sum[r] += a;
                if r != c {
                    row_sum[c] += a;
                }
            }
        }
        row_sum.into_iter().fold(T::zero(), |acc, x| acc.max(x))
    }

    /// `y = A x` with the symmetric matrix implied by the stored lower triangle.
    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = T::zero());
        for c in 0..self.n {
            let xc = x[c];
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                let v = self.values[p];
                y[r] += v * xc;
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
    }

    /// Densifies into a row-major `n x n` symmetric matrix.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.n;
        let mut dense = vec![T::zero(); n * n];
        for c in 0..n {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                dense[r * n + c] = self.values[p];
                dense[c * n + r] = self.values[p];
            }
        }
        dense
    }

    /// Writes the matrix in MatrixMarket coordinate symmetric format (1-based).
    pub fn write_matrix_market<W: Write>(&self, w: W) -> Result<(), SparseError> {
        let mut w = BufWriter::new(w);
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for c in 0..self.n {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                writeln!(w, "{} {} {:e}", self.row_idx[p] + 1, c + 1, self.values[p])?;
            }
        }
        Ok(())
    }

    pub fn dump_matrix_market<P: AsRef<Path>>(&self, path: P) -> Result<(), SparseError> {
        let file = std::fs::File::create(path)?;
        self.write_matrix_market(file)
    }

    /// Reads a matrix in MatrixMarket coordinate symmetric format.
    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Self, SparseError> {
        let mm = |line: usize, msg: &str| SparseError::MatrixMarket {
            line,
            msg: msg.to_string(),
        };
        let mut lines = r.lines().enumerate();
        let (lno, header) = lines
            .next()
            .ok_or_else(|| mm(1, "empty file"))
            .and_then(|(i, l)| Ok((i + 1, l?)))?;
        let header = header.to_ascii_lowercase();
        if !header.starts_with("%%matrixmarket") || !header.contains("symmetric") {
            return Err(mm(lno, "expected coordinate real symmetric header"));
        }
        let mut size: Option<(usize, usize)> = None;
        let mut entries: Vec<(usize, usize, T)> = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let lno = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let mut it = trimmed.split_whitespace();
            if size.is_none() {
                let n1: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| mm(lno, "bad size line"))?;
                let n2: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| mm(lno, "bad size line"))?;
                let nnz: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| mm(lno, "bad size line"))?;
                if n1 != n2 {
                    return Err(mm(lno, "matrix must be square"));
                }
                size = Some((n1, nnz));
                entries.reserve(nnz);
            } else {
                let r: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| mm(lno, "bad entry line"))?;
                let c: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| mm(lno, "bad entry line"))?;
                let v: f64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| mm(lno, "bad entry line"))?;
                if r == 0 || c == 0 {
                    return Err(mm(lno, "indices are 1-based"));
                }
                entries.push((r - 1, c - 1, T::cst(v)));
            }
        }
        let (n, _) = size.ok_or_else(|| mm(0, "missing size line"))?;
        csc_from_triplets(n, &entries)
    }

    pub fn load_matrix_market<P: AsRef<Path>>(path: P) -> Result<Self, SparseError> {
        let file = std::fs::File::open(path)?;
        Self::read_matrix_market(std::io::BufReader::new(file))
    }
}

/// Assembles a symmetric matrix from coordinate triplets.
///
/// Duplicates are summed and upper-triangle entries are mirrored into the
/// lower triangle. Indices are 0-based.
pub fn csc_from_triplets<T: Scalar>(
    n: usize,
    entries: &[(usize, usize, T)],
) -> Result<SparseSymCsc<T>, SparseError> {
    for &(r, c, _) in entries {
        if r >= n || c >= n {
            return Err(SparseError::IndexOutOfRange { row: r, col: c, n });
        }
    }
    // Mirror into the lower triangle, then sort and compress.
    let mut low: Vec<(usize, usize, T)> = entries
        .iter()
        .map(|&(r, c, v)| if r >= c { (c, r, v) } else { (r, c, v) })
        .collect();
    low.sort_by_key(|&(c, r, _)| (c, r));

    let mut col_counts = vec![0usize; n];
    let mut row_idx = Vec::with_capacity(low.len());
    let mut values: Vec<T> = Vec::with_capacity(low.len());
    let mut last: Option<(usize, usize)> = None;
    for (c, r, v) in low {
        if last == Some((c, r)) {
            *values.last_mut().unwrap() += v;
        } else {
            row_idx.push(r);
            values.push(v);
            col_counts[c] += 1;
            last = Some((c, r));
        }
    }
    let mut col_ptr = vec![0usize; n + 1];
    for c in 0..n {
        col_ptr[c + 1] = col_ptr[c] + col_counts[c];
    }
    Ok(SparseSymCsc::from_parts(n, col_ptr, row_idx, values))
}
