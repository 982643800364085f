//! Sparse symmetric positive-definite Cholesky factorisation.
//!
//! The sparsity pattern of the CAR precision never changes for a given graph
//! (only the values move as borders switch on and off), so the work is split:
//! [`SymbolicCholesky::analyze`] computes a minimum-degree ordering, the
//! elimination tree and the column layout of `L` once; [`SymbolicCholesky::factor`]
//! then runs an up-looking numeric factorisation into that fixed layout.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scalar::Real;

const NONE: usize = usize::MAX;

/// Ordering, elimination tree and `L` layout for one sparsity pattern.
#[derive(Debug, Clone)]
pub struct SymbolicCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// `inv_perm[old] = new`.
    inv_perm: Vec<usize>,
    // Upper triangle of the permuted matrix, CSC.
    c_colptr: Vec<usize>,
    c_rowidx: Vec<usize>,
    parent: Vec<usize>,
    l_colptr: Vec<usize>,
}

/// Numeric factor `P A P^T = L L^T`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor<T> {
    l_rowidx: Vec<usize>,
    l_values: Vec<T>,
}

/// Greedy minimum-degree ordering on the elimination graph. Ties go to the
/// lowest index, so the ordering is deterministic.
pub fn minimum_degree_order(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(a, b) in edges {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !eliminated[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .expect("uneliminated vertex remains");
        eliminated[v] = true;
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        for (idx, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[idx + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    order
}

impl SymbolicCholesky {
    /// Analyses the pattern "full diagonal plus `edges`" (each unordered pair
    /// once) on `n` vertices.
    pub fn analyze(n: usize, edges: &[(usize, usize)]) -> Self {
        let perm = minimum_degree_order(n, edges);
        Self::with_ordering(n, edges, perm)
    }

    /// As [`analyze`](Self::analyze) with a caller-supplied ordering.
    pub fn with_ordering(n: usize, edges: &[(usize, usize)], perm: Vec<usize>) -> Self {
        assert_eq!(perm.len(), n);
        let mut inv_perm = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }
        assert!(inv_perm.iter().all(|&p| p != NONE), "ordering is not a permutation");

        // Permuted upper-triangular column lists (diagonal included).
        let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for &(a, b) in edges {
            let (pa, pb) = (inv_perm[a], inv_perm[b]);
            let (i, j) = (pa.min(pb), pa.max(pb));
            cols[j].push(i);
        }
        let mut c_colptr = Vec::with_capacity(n + 1);
        let mut c_rowidx = Vec::new();
        c_colptr.push(0);
        for mut col in cols {
            col.sort_unstable();
            col.dedup();
            c_rowidx.extend(col);
            c_colptr.push(c_rowidx.len());
        }

        let parent = etree(n, &c_colptr, &c_rowidx);

        let mut counts = vec![1usize; n];
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = ereach(k, &c_colptr, &c_rowidx, &parent, &mut stack, &mut mark);
            for &i in &stack[top..] {
                counts[i] += 1;
            }
        }
        let mut l_colptr = Vec::with_capacity(n + 1);
        l_colptr.push(0);
        for c in counts {
            l_colptr.push(l_colptr.last().unwrap() + c);
        }

        SymbolicCholesky { n, perm, inv_perm, c_colptr, c_rowidx, parent, l_colptr }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Number of stored entries in `L`.
    pub fn nnz_l(&self) -> usize {
        *self.l_colptr.last().unwrap()
    }

    /// Number of stored entries in the upper triangle of the input.
    pub fn nnz_upper(&self) -> usize {
        self.c_rowidx.len()
    }

    /// Slot in the upper-triangle value array holding entry `(a, b)` of the
    /// unpermuted matrix. Panics when the entry is outside the pattern.
    pub fn slot(&self, a: usize, b: usize) -> usize {
        let (pa, pb) = (self.inv_perm[a], self.inv_perm[b]);
        let (i, j) = (pa.min(pb), pa.max(pb));
        let range = self.c_colptr[j]..self.c_colptr[j + 1];
        let col = &self.c_rowidx[range.clone()];
        range.start + col.binary_search(&i).expect("entry outside the analysed pattern")
    }

    /// Numeric factorisation of the matrix whose upper-triangle values are
    /// laid out by [`slot`](Self::slot).
    pub fn factor<T: Real>(&self, upper_values: &[T]) -> Result<CholeskyFactor<T>> {
        assert_eq!(upper_values.len(), self.c_rowidx.len());
        let n = self.n;
        let nnz = self.nnz_l();
        let mut l_rowidx = vec![0usize; nnz];
        let mut l_values = vec![T::zero(); nnz];
        let mut next: Vec<usize> = self.l_colptr[..n].to_vec();
        let mut x = vec![T::zero(); n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];

        for k in 0..n {
            let top = ereach(k, &self.c_colptr, &self.c_rowidx, &self.parent, &mut stack, &mut mark);
            for p in self.c_colptr[k]..self.c_colptr[k + 1] {
                x[self.c_rowidx[p]] = upper_values[p];
            }
            let mut d = x[k];
            x[k] = T::zero();
            for &i in &stack[top..] {
                let lki = x[i] / l_values[self.l_colptr[i]];
                x[i] = T::zero();
                for p in self.l_colptr[i] + 1..next[i] {
                    x[l_rowidx[p]] = x[l_rowidx[p]] - l_values[p] * lki;
                }
                d = d - lki * lki;
                let p = next[i];
                next[i] += 1;
                l_rowidx[p] = k;
                l_values[p] = lki;
            }
            if !(d > T::zero()) {
                return Err(Error::NotPositiveDefinite { pivot: self.perm[k] });
            }
            let p = next[k];
            next[k] += 1;
            l_rowidx[p] = k;
            l_values[p] = d.sqrt();
        }
        Ok(CholeskyFactor { l_rowidx, l_values })
    }
}

fn etree(n: usize, colptr: &[usize], rowidx: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &start in &rowidx[colptr[k]..colptr[k + 1]] {
            let mut i = start;
            while i != NONE && i < k {
                let inext = ancestor[i];
                ancestor[i] = k;
                if inext == NONE {
                    parent[i] = k;
                }
                i = inext;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal), returned in
/// `stack[top..]` in topological order.
fn ereach(
    k: usize,
    colptr: &[usize],
    rowidx: &[usize],
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = k;
    for &start in &rowidx[colptr[k]..colptr[k + 1]] {
        if start > k {
            continue;
        }
        let mut i = start;
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

impl<T: Real> CholeskyFactor<T> {
    /// `log |A| = 2 sum ln L_jj`.
    pub fn log_det(&self, sym: &SymbolicCholesky) -> T {
        let two = T::of(2.0);
        (0..sym.n).map(|j| self.l_values[sym.l_colptr[j]].ln()).sum::<T>() * two
    }

    /// Solves `A x = b` in the original (unpermuted) coordinates.
    pub fn solve(&self, sym: &SymbolicCholesky, b: &[T]) -> Vec<T> {
        let n = sym.n;
        let mut y: Vec<T> = (0..n).map(|i| b[sym.perm[i]]).collect();
        self.forward(sym, &mut y);
        self.backward(sym, &mut y);
        let mut x = vec![T::zero(); n];
        for i in 0..n {
            x[sym.perm[i]] = y[i];
        }
        x
    }

    /// Returns `x` with `L^T (P x) = z`; if `z ~ N(0, I)` then `x ~ N(0, A^{-1})`.
    pub fn solve_lt(&self, sym: &SymbolicCholesky, z: &[T]) -> Vec<T> {
        let mut y = z.to_vec();
        self.backward(sym, &mut y);
        let mut x = vec![T::zero(); sym.n];
        for i in 0..sym.n {
            x[sym.perm[i]] = y[i];
        }
        x
    }

    fn forward(&self, sym: &SymbolicCholesky, y: &mut [T]) {
        for j in 0..sym.n {
            let start = sym.l_colptr[j];
            y[j] = y[j] / self.l_values[start];
            for p in start + 1..sym.l_colptr[j + 1] {
                y[self.l_rowidx[p]] = y[self.l_rowidx[p]] - self.l_values[p] * y[j];
            }
        }
    }

    fn backward(&self, sym: &SymbolicCholesky, y: &mut [T]) {
        for j in (0..sym.n).rev() {
            let start = sym.l_colptr[j];
            let mut acc = y[j];
            for p in start + 1..sym.l_colptr[j + 1] {
                acc = acc - self.l_values[p] * y[self.l_rowidx[p]];
            }
            y[j] = acc / self.l_values[start];
        }
    }
}
