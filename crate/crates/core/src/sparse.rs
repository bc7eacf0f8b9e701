//! Compressed sparse row storage for the reduced Hessian and a sparse
//! Cholesky factorization with a nested-dissection fill-reducing ordering.
//!
//! The factorization is the classic up-looking scheme: row `k` of `L` is
//! obtained from a sparse triangular solve whose pattern is the reach of
//! row `k` of `A` in the elimination tree.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Square sparse matrix in CSR form. Symmetric matrices store both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(p) => self.values[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] += v;
            }
        }
        d
    }

    /// Structural adjacency (off-diagonal pattern) of a symmetric matrix.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|r| self.row(r).map(|(c, _)| c).filter(|&c| c != r).collect())
            .collect()
    }
}

/// Nested-dissection ordering of an undirected graph given by adjacency
/// lists. Returns `perm` with `perm[new] = old`.
///
/// Separators are middle levels of a breadth-first level structure rooted
/// at a pseudo-peripheral node; parts are ordered before their separator.
pub fn nested_dissection(adj: &[Vec<usize>]) -> Vec<usize> {
    const LEAF: usize = 48;
    let n = adj.len();
    let mut perm = Vec::with_capacity(n);
    // part label of every node; a node takes part in BFS only within its part
    let mut part = vec![0usize; n];
    let mut level = vec![usize::MAX; n];
    let mut next_label = 1usize;

    // explicit work stack: (label, nodes); a separator entry carries
    // nodes that must be emitted once its children have been emitted
    enum Task {
        Split(usize, Vec<usize>),
        Emit(Vec<usize>),
    }
    let mut stack = vec![Task::Split(0, (0..n).collect())];

    while let Some(task) = stack.pop() {
        let (label, nodes) = match task {
            Task::Emit(nodes) => {
                perm.extend(nodes);
                continue;
            }
            Task::Split(label, nodes) => (label, nodes),
        };
        if nodes.len() <= LEAF {
            perm.extend(nodes);
            continue;
        }

        let bfs = |root: usize, level: &mut Vec<usize>, part: &Vec<usize>| -> Vec<Vec<usize>> {
            let mut levels: Vec<Vec<usize>> = Vec::new();
            let mut queue = VecDeque::new();
            level[root] = 0;
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                let l = level[v];
                if levels.len() <= l {
                    levels.push(Vec::new());
                }
                levels[l].push(v);
                for &w in &adj[v] {
                    if part[w] == label && level[w] == usize::MAX {
                        level[w] = l + 1;
                        queue.push_back(w);
                    }
                }
            }
            levels
        };
        let reset = |levels: &Vec<Vec<usize>>, level: &mut Vec<usize>| {
            for v in levels.iter().flatten() {
                level[*v] = usize::MAX;
            }
        };

        // pseudo-peripheral root by repeated sweeps
        let mut root = nodes[0];
        let mut levels = bfs(root, &mut level, &part);
        for _ in 0..4 {
            let far = *levels
                .last()
                .unwrap()
                .iter()
                .min_by_key(|&&v| adj[v].iter().filter(|&&w| part[w] == label).count())
                .unwrap();
            reset(&levels, &mut level);
            let candidate = bfs(far, &mut level, &part);
            if candidate.len() > levels.len() {
                root = far;
                levels = candidate;
            } else {
                reset(&candidate, &mut level);
                levels = bfs(root, &mut level, &part);
                break;
            }
        }
        reset(&levels, &mut level);

        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < nodes.len() {
            // disconnected: peel off the reached component
            let comp: Vec<usize> = levels.into_iter().flatten().collect();
            let l_comp = next_label;
            next_label += 1;
            for &v in &comp {
                part[v] = l_comp;
            }
            let rest: Vec<usize> = nodes.into_iter().filter(|&v| part[v] == label).collect();
            stack.push(Task::Split(label, rest));
            stack.push(Task::Split(l_comp, comp));
            continue;
        }
        if levels.len() < 3 {
            perm.extend(nodes);
            continue;
        }

        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (l, lv) in levels.iter().enumerate() {
            acc += lv.len();
            if acc >= half {
                mid = l.clamp(1, levels.len() - 2);
                break;
            }
        }
        let (la, lb) = (next_label, next_label + 1);
        next_label += 2;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (l, lv) in levels.iter().enumerate() {
            if l < mid {
                a.extend_from_slice(lv);
            } else if l > mid {
                b.extend_from_slice(lv);
            }
        }
        for &v in &a {
            part[v] = la;
        }
        for &v in &b {
            part[v] = lb;
        }
        let sep = std::mem::take(&mut levels[mid]);
        for &v in &sep {
            part[v] = usize::MAX;
        }
        stack.push(Task::Emit(sep));
        stack.push(Task::Split(lb, b));
        stack.push(Task::Split(la, a));
    }
    perm
}

/// Expands a vertex ordering to `block`-sized groups of unknowns.
pub fn expand_block_ordering(vertex_perm: &[usize], block: usize) -> Vec<usize> {
    vertex_perm
        .iter()
        .flat_map(|&v| (0..block).map(move |d| block * v + d))
        .collect()
}

/// Ordering and the structure of the permuted upper triangle, reusable for
/// every matrix with the same pattern.
#[derive(Debug, Clone)]
pub struct SymbolicCholesky {
    n: usize,
    perm: Vec<usize>,
    /// Upper triangle of `P A P^T` in compressed column form.
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// For every CSR entry of `A`, its slot in the permuted upper triangle.
    slot_of_entry: Vec<Option<usize>>,
    diag_slot: Vec<usize>,
    parent: Vec<usize>,
    l_col_ptr: Vec<usize>,
    pattern: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl SymbolicCholesky {
    /// Analyses a structurally symmetric matrix with an explicit diagonal.
    pub fn new(a: &CsrMatrix, perm: Vec<usize>) -> Self {
        let n = a.n;
        assert_eq!(perm.len(), n);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut counts = vec![0usize; n];
        for r in 0..n {
            for (c, _) in a.row(r) {
                let (pr, pc) = (inv[r], inv[c]);
                if pr <= pc {
                    counts[pc] += 1;
                }
            }
        }
        let mut col_ptr = vec![0; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + counts[k];
        }
        let mut fill = col_ptr[..n].to_vec();
        let mut row_idx = vec![0; col_ptr[n]];
        let mut slot_of_entry = vec![None; a.nnz()];
        let mut diag_slot = vec![NONE; n];
        for r in 0..n {
            for p in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.col_idx[p];
                let (pr, pc) = (inv[r], inv[c]);
                if pr <= pc {
                    let s = fill[pc];
                    fill[pc] += 1;
                    row_idx[s] = pr;
                    slot_of_entry[p] = Some(s);
                    if pr == pc {
                        diag_slot[pc] = s;
                    }
                }
            }
        }
        assert!(
            diag_slot.iter().all(|&s| s != NONE),
            "missing diagonal entry"
        );

        // elimination tree
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &r in &row_idx[col_ptr[k]..col_ptr[k + 1]] {
                let mut i = r;
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

        let mut sym = SymbolicCholesky {
            n,
            perm,
            col_ptr,
            row_idx,
            slot_of_entry,
            diag_slot,
            parent,
            l_col_ptr: Vec::new(),
            pattern: Vec::new(),
        };

        // column counts of L from the row patterns
        let mut lcount = vec![1usize; n];
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = sym.ereach(k, &mut stack, &mut mark);
            for &j in &stack[top..] {
                lcount[j] += 1;
            }
        }
        let mut l_col_ptr = vec![0; n + 1];
        for k in 0..n {
            l_col_ptr[k + 1] = l_col_ptr[k] + lcount[k];
        }
        sym.l_col_ptr = l_col_ptr;
        sym.pattern = stack;
        sym
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of nonzeros of the factor.
    pub fn factor_nnz(&self) -> usize {
        self.l_col_ptr[self.n]
    }

    /// Nonzero pattern of row `k` of `L` (excluding the diagonal) in
    /// `stack[top..]`, topologically ordered.
    fn ereach(&self, k: usize, stack: &mut [usize], mark: &mut [usize]) -> usize {
        let mut top = self.n;
        mark[k] = k;
        for &r in &self.row_idx[self.col_ptr[k]..self.col_ptr[k + 1]] {
            if r >= k {
                continue;
            }
            let mut len = 0;
            let mut i = r;
            while mark[i] != k {
                stack[len] = i;
                len += 1;
                mark[i] = k;
                i = self.parent[i];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                stack[top] = stack[len];
            }
        }
        top
    }

    /// Numeric factorization of `A + shift I`.
    ///
    /// Fails with `NotPositiveDefinite` when a pivot is not larger than
    /// `pivot_tol` times the corresponding diagonal entry.
    pub fn factor(&self, a: &CsrMatrix, shift: f64, pivot_tol: f64) -> Result<CholeskyFactor> {
        let n = self.n;
        let mut upper = vec![0.0; self.row_idx.len()];
        for (p, slot) in self.slot_of_entry.iter().enumerate() {
            if let Some(s) = slot {
                upper[*s] += a.values[p];
            }
        }
        for &s in &self.diag_slot {
            upper[s] += shift;
        }

        let nnz = self.factor_nnz();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0f64; nnz];
        let mut next = self.l_col_ptr[..n].to_vec();
        let mut x = vec![0.0f64; n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];

        for k in 0..n {
            let top = self.ereach(k, &mut stack, &mut mark);
            for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                x[self.row_idx[p]] = upper[p];
            }
            let akk = upper[self.diag_slot[k]];
            let mut d = x[k];
            x[k] = 0.0;
            for &j in &stack[top..] {
                let start = self.l_col_ptr[j];
                let lkj = x[j] / lx[start];
                x[j] = 0.0;
                for p in start + 1..next[j] {
                    x[li[p]] -= lx[p] * lkj;
                }
                d -= lkj * lkj;
                let p = next[j];
                next[j] += 1;
                li[p] = k;
                lx[p] = lkj;
            }
            if !(d > pivot_tol * akk.abs()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    column: self.perm[k],
                    pivot: d,
                });
            }
            let p = next[k];
            next[k] += 1;
            li[p] = k;
            lx[p] = d.sqrt();
        }

        Ok(CholeskyFactor {
            perm: self.perm.clone(),
            col_ptr: self.l_col_ptr.clone(),
            row_idx: li,
            values: lx,
        })
    }
}

/// `P (A + shift I) P^T = L L^T` with `L` stored by columns, diagonal first.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CholeskyFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..n {
            let start = self.col_ptr[j];
            y[j] /= self.values[start];
            let yj = y[j];
            for p in start + 1..self.col_ptr[j + 1] {
                y[self.row_idx[p]] -= self.values[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let start = self.col_ptr[j];
            let mut s = y[j];
            for p in start + 1..self.col_ptr[j + 1] {
                s -= self.values[p] * y[self.row_idx[p]];
            }
            y[j] = s / self.values[start];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
