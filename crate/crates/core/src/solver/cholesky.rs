//! Up-looking sparse Cholesky factorization `P A Pᵀ = L Lᵀ`.
//!
//! The symbolic phase (ordering, elimination tree, row reach sets and the
//! pattern of `L`) depends only on the sparsity pattern and is shared across
//! numeric factorizations of matrices with the same pattern.

use std::sync::Arc;

use super::{ordering, SolverError};
use crate::fem::{SparseSymMatrix, SparsityPattern};

/// A pivot at or below this fraction of the largest diagonal entry of `A`
/// means the matrix is not numerically positive definite.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

#[derive(Debug)]
pub struct SymbolicCholesky {
    pattern: Arc<SparsityPattern>,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    // Upper triangle of the permuted matrix, by column: row index and the
    // storage slot of the source entry in `A`.
    c_ptr: Vec<usize>,
    c_row: Vec<usize>,
    c_src: Vec<usize>,
    // Pattern of L by column, diagonal first.
    l_ptr: Vec<usize>,
    l_row: Vec<usize>,
    // For each row k, the columns i < k with L[k, i] != 0 in topological
    // order of the elimination tree.
    reach_ptr: Vec<usize>,
    reach: Vec<usize>,
}

impl SymbolicCholesky {
    pub fn analyze(pattern: &Arc<SparsityPattern>) -> Arc<Self> {
        let perm = ordering::nested_dissection(pattern);
        Arc::new(Self::with_ordering(pattern, perm))
    }

    pub fn with_ordering(pattern: &Arc<SparsityPattern>, perm: Vec<usize>) -> Self {
        let n = pattern.dim();
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        let mut c_ptr = Vec::with_capacity(n + 1);
        let mut c_row = Vec::new();
        let mut c_src = Vec::new();
        c_ptr.push(0);
        for &old in &perm {
            let k = iperm[old];
            for (src, &old_j) in pattern.row_range(old).zip(pattern.row(old)) {
                let i = iperm[old_j];
                if i <= k {
                    c_row.push(i);
                    c_src.push(src);
                }
            }
            c_ptr.push(c_row.len());
        }

        const NONE: usize = usize::MAX;
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &start in &c_row[c_ptr[k]..c_ptr[k + 1]] {
                let mut i = start;
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }

        let mut mark = vec![NONE; n];
        let mut path = Vec::with_capacity(n);
        let mut reach_ptr = Vec::with_capacity(n + 1);
        let mut reach = Vec::new();
        let mut col_count = vec![1usize; n];
        reach_ptr.push(0);
        for k in 0..n {
            mark[k] = k;
            let row_start = reach.len();
            for &start in &c_row[c_ptr[k]..c_ptr[k + 1]] {
                let mut i = start;
                path.clear();
                while mark[i] != k {
                    path.push(i);
                    mark[i] = k;
                    i = parent[i];
                }
                // Earlier paths must come after this one: prepend.
                reach.splice(row_start..row_start, path.iter().copied());
            }
            for &i in &reach[row_start..] {
                col_count[i] += 1;
            }
            reach_ptr.push(reach.len());
        }

        let mut l_ptr = Vec::with_capacity(n + 1);
        l_ptr.push(0);
        for &c in &col_count {
            l_ptr.push(l_ptr.last().unwrap() + c);
        }
        let mut l_row = vec![0; *l_ptr.last().unwrap()];
        let mut next: Vec<usize> = l_ptr[..n].to_vec();
        for k in 0..n {
            for &i in &reach[reach_ptr[k]..reach_ptr[k + 1]] {
                l_row[next[i]] = k;
                next[i] += 1;
            }
            l_row[next[k]] = k;
            next[k] += 1;
        }
        // Column k's own diagonal was written when row k was processed,
        // which precedes every later row, so it sits at l_ptr[k].

        SymbolicCholesky {
            pattern: Arc::clone(pattern),
            perm,
            c_ptr,
            c_row,
            c_src,
            l_ptr,
            l_row,
            reach_ptr,
            reach,
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Stored entries of `L`, diagonal included.
    pub fn factor_nnz(&self) -> usize {
        self.l_row.len()
    }
}

#[derive(Debug, Clone)]
pub struct Factorization {
    symbolic: Arc<SymbolicCholesky>,
    values: Vec<f64>,
}

/// Orders, analyzes and factors `a`.
pub fn factorize(a: &SparseSymMatrix) -> Result<Factorization, SolverError> {
    Factorization::new(&SymbolicCholesky::analyze(a.pattern()), a)
}

impl Factorization {
    pub fn new(symbolic: &Arc<SymbolicCholesky>, a: &SparseSymMatrix) -> Result<Self, SolverError> {
        let s = symbolic.as_ref();
        if a.dim() != s.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: s.dim(),
                actual: a.dim(),
            });
        }
        assert!(
            Arc::ptr_eq(a.pattern(), &s.pattern) || **a.pattern() == *s.pattern,
            "matrix pattern differs from the analyzed pattern"
        );
        let n = s.dim();
        let tol = PIVOT_TOLERANCE * a.max_abs_diagonal();
        let av = a.values();
        let mut lx = vec![0.0; s.l_row.len()];
        let mut next: Vec<usize> = s.l_ptr[..n].to_vec();
        let mut x = vec![0.0; n];
        for k in 0..n {
            for p in s.c_ptr[k]..s.c_ptr[k + 1] {
                x[s.c_row[p]] = av[s.c_src[p]];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &s.reach[s.reach_ptr[k]..s.reach_ptr[k + 1]] {
                let lki = x[i] / lx[s.l_ptr[i]];
                x[i] = 0.0;
                for p in s.l_ptr[i] + 1..next[i] {
                    x[s.l_row[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                lx[next[i]] = lki;
                next[i] += 1;
            }
            if !(d > tol) {
                return Err(SolverError::NotPositiveDefinite {
                    pivot: s.perm[k],
                    value: d,
                });
            }
            lx[next[k]] = d.sqrt();
            next[k] += 1;
        }
        Ok(Factorization {
            symbolic: Arc::clone(symbolic),
            values: lx,
        })
    }

    pub fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        &self.symbolic
    }

    pub fn dim(&self) -> usize {
        self.symbolic.dim()
    }

    /// Solves `A X = B` for an `n × K` right-hand side stored by rows.
    pub fn solve<const K: usize>(&self, rhs: &[[f64; K]]) -> Result<Vec<[f64; K]>, SolverError> {
        let s = self.symbolic.as_ref();
        let n = s.dim();
        if rhs.len() != n {
            return Err(SolverError::DimensionMismatch {
                expected: n,
                actual: rhs.len(),
            });
        }
        let lx = &self.values;
        let mut y: Vec<[f64; K]> = s.perm.iter().map(|&old| rhs[old]).collect();
        for j in 0..n {
            let d = lx[s.l_ptr[j]];
            for c in 0..K {
                y[j][c] /= d;
            }
            let yj = y[j];
            for p in s.l_ptr[j] + 1..s.l_ptr[j + 1] {
                let r = s.l_row[p];
                for c in 0..K {
                    y[r][c] -= lx[p] * yj[c];
                }
            }
        }
        for j in (0..n).rev() {
            let mut acc = y[j];
            for p in s.l_ptr[j] + 1..s.l_ptr[j + 1] {
                let r = s.l_row[p];
                for c in 0..K {
                    acc[c] -= lx[p] * y[r][c];
                }
            }
            let d = lx[s.l_ptr[j]];
            for c in 0..K {
                acc[c] /= d;
            }
            y[j] = acc;
        }
        let mut out = vec![[0.0; K]; n];
        for (new, &old) in s.perm.iter().enumerate() {
            out[old] = y[new];
        }
        Ok(out)
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        let rows: Vec<[f64; 1]> = rhs.iter().map(|&v| [v]).collect();
        Ok(self.solve(&rows)?.into_iter().map(|[v]| v).collect())
    }

    /// Dense copy of `L` in the permuted ordering.
    pub fn lower_dense(&self) -> Vec<Vec<f64>> {
        let s = self.symbolic.as_ref();
        let n = s.dim();
        let mut l = vec![vec![0.0; n]; n];
        for j in 0..n {
            for p in s.l_ptr[j]..s.l_ptr[j + 1] {
                l[s.l_row[p]][j] = self.values[p];
            }
        }
        l
    }

    pub fn factor_values(&self) -> &[f64] {
        &self.values
    }
}
