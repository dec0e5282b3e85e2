//! Symbolic analysis for the LDL^T factorization: permutation bookkeeping,
//! elimination tree and the structural pattern of the factor.

use crate::scalar::Scalar;
use crate::sparse::SparseSymCsc;

pub(crate) const NONE: usize = usize::MAX;

/// Reusable symbolic plan for matrices sharing one sparsity structure.
///
/// The plan stores the permuted pattern in "upper" layout (column `i` holds
/// the entries of row `i` of the permuted lower triangle), the elimination
/// tree and the exact structural pattern of the strictly lower triangular
/// factor. The unit diagonal of `L` is implicit.
#[derive(Debug, Clone)]
pub struct SymbolicPlan {
    pub(crate) n: usize,
    pub(crate) perm: Vec<usize>,
    pub(crate) iperm: Vec<usize>,
    pub(crate) up_col_ptr: Vec<usize>,
    pub(crate) up_row_idx: Vec<usize>,
    /// Maps positions in the permuted upper layout back into the original
    /// value array, so numeric refactorizations skip the permutation sort.
    pub(crate) up_from_orig: Vec<usize>,
    pub(crate) etree: Vec<usize>,
    pub(crate) l_col_ptr: Vec<usize>,
    pub(crate) l_row_idx: Vec<usize>,
}

impl SymbolicPlan {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Parent of each node in the elimination tree; `usize::MAX` marks roots.
    pub fn etree(&self) -> &[usize] {
        &self.etree
    }

    /// Number of structural nonzeros of `L`, unit diagonal included.
    pub fn l_pattern_nnz(&self) -> usize {
        self.l_row_idx.len() + self.n
    }

    /// Column counts of the strictly lower triangular pattern of `L`.
    pub fn l_col_counts(&self) -> Vec<usize> {
        (0..self.n)
            .map(|c| self.l_col_ptr[c + 1] - self.l_col_ptr[c])
            .collect()
    }

    /// Fill-in: structural entries of `L` absent from the permuted matrix.
    pub fn fill_count(&self) -> usize {
        // Off-diagonal entries of A (upper layout) are a subset of L's.
        let a_off = self
            .up_row_idx
            .iter()
            .zip(column_of(&self.up_col_ptr))
            .filter(|&(&r, c)| r != c)
            .count();
        self.l_row_idx.len() - a_off
    }
}

fn column_of(col_ptr: &[usize]) -> impl Iterator<Item = usize> + '_ {
    (0..col_ptr.len() - 1).flat_map(move |c| std::iter::repeat(c).take(col_ptr[c + 1] - col_ptr[c]))
}

/// Builds the symbolic plan of `A` under `perm`.
///
/// `perm[k]` is the original index eliminated at step `k`. The resulting
/// factor pattern is exact for the given structure, so it is a superset of
/// the numeric pattern of any matrix sharing it.
pub fn symbolic_analyze<T: Scalar>(a: &SparseSymCsc<T>, perm: &[usize]) -> SymbolicPlan {
    let n = a.dim();
    assert_eq!(perm.len(), n, "permutation length mismatch");
    let mut iperm = vec![0usize; n];
    for (k, &orig) in perm.iter().enumerate() {
        iperm[orig] = k;
    }

    // Permute into upper layout: entry (r, c) of the lower triangle lands in
    // column max(pr, pc) with row min(pr, pc).
    let mut cols: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for c in 0..n {
        for p in a.col_ptr()[c]..a.col_ptr()[c + 1] {
            let r = a.row_idx()[p];
            let (pr, pc) = (iperm[r], iperm[c]);
            let (i, j) = if pr <= pc { (pr, pc) } else { (pc, pr) };
            cols[j].push((i, p));
        }
    }
    let mut up_col_ptr = vec![0usize; n + 1];
    let mut up_row_idx = Vec::with_capacity(a.nnz());
    let mut up_from_orig = Vec::with_capacity(a.nnz());
    for (j, col) in cols.iter_mut().enumerate() {
        col.sort_unstable_by_key(|&(i, _)| i);
        for &(i, p) in col.iter() {
            up_row_idx.push(i);
            up_from_orig.push(p);
        }
        up_col_ptr[j + 1] = up_row_idx.len();
    }

    // Elimination tree (Liu's algorithm with path compression).
    let mut etree = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for j in 0..n {
        for p in up_col_ptr[j]..up_col_ptr[j + 1] {
            let mut k = up_row_idx[p];
            while k != NONE && k < j {
                let next = ancestor[k];
                ancestor[k] = j;
                if next == NONE {
                    etree[k] = j;
                }
                k = next;
            }
        }
    }

    // Exact pattern of L by row subtrees: the pattern of row i is the set of
    // nodes reached walking the etree up from the entries of row i of A.
    let mut marker = vec![NONE; n];
    let mut row_pattern: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        marker[i] = i;
        for p in up_col_ptr[i]..up_col_ptr[i + 1] {
            let mut j = up_row_idx[p];
            while j < i && marker[j] != i {
                marker[j] = i;
                row_pattern[j].push(i);
                j = etree[j];
                if j == NONE {
                    break;
                }
            }
        }
    }
    let mut l_col_ptr = vec![0usize; n + 1];
    let mut l_row_idx = Vec::new();
    for (j, rows) in row_pattern.iter().enumerate() {
        // Rows were appended in increasing i by construction.
        l_row_idx.extend_from_slice(rows);
        l_col_ptr[j + 1] = l_row_idx.len();
    }

    SymbolicPlan {
        n,
        perm: perm.to_vec(),
        iperm,
        up_col_ptr,
        up_row_idx,
        up_from_orig,
        etree,
        l_col_ptr,
        l_row_idx,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{csc_from_triplets, order::identity_order};

    #[test]
    fn identity_matrix_forest() {
        let a =
            csc_from_triplets(4, &[(0, 0, 1.0f64), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0)]).unwrap();
        let plan = symbolic_analyze(&a, &identity_order(4));
        assert_eq!(plan.etree(), &[NONE; 4]);
        assert_eq!(plan.l_pattern_nnz(), 4); // diagonal only
    }

    #[test]
    fn tridiagonal_path() {
        let mut entries = Vec::new();
        for i in 0..4usize {
            entries.push((i, i, 2.0f64));
            if i > 0 {
                entries.push((i, i - 1, -1.0));
            }
        }
        let a = csc_from_triplets(4, &entries).unwrap();
        let plan = symbolic_analyze(&a, &identity_order(4));
        // Textbook elimination tree of a tridiagonal matrix is a path.
        assert_eq!(plan.etree(), &[1, 2, 3, NONE]);
        assert_eq!(plan.l_pattern_nnz(), 7);
        assert_eq!(plan.fill_count(), 0);
    }

    #[test]
    fn dense_three_by_three() {
        let entries = vec![
            (0usize, 0usize, 2.0f64),
            (1, 0, 1.0),
            (2, 0, 1.0),
            (1, 1, 2.0),
            (2, 1, 1.0),
            (2, 2, 2.0),
        ];
        let a = csc_from_triplets(3, &entries).unwrap();
        let plan = symbolic_analyze(&a, &identity_order(3));
        assert_eq!(plan.l_pattern_nnz(), 6);
    }

    #[test]
    fn arrow_fill_vs_identity() {
        // Dense first row/column; minimum degree orders the hub last,
        // which should not produce more fill than the identity ordering.
        let n = 6;
        let mut entries = vec![(0usize, 0usize, 2.0f64)];
        for i in 1..n {
            entries.push((i, 0, 1.0));
            entries.push((i, i, 2.0));
        }
        let a = csc_from_triplets(n, &entries).unwrap();
        let fill_id = symbolic_analyze(&a, &identity_order(n)).fill_count();
        let fill_md = symbolic_analyze(&a, &crate::sparse::amd_order(&a)).fill_count();
        assert!(fill_md <= fill_id);
        assert_eq!(fill_md, 0, "hub-last ordering of an arrow has no fill");
        assert_eq!(fill_id, (n - 1) * (n - 2) / 2);
    }
}
