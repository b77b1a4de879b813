//! The nonbacktracking operator `B_{(i,j),(k,l)} = H_kl [j = k] [i != l]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::model::{LinearOp, SparseMatrix};
use crate::{Error, Result, Scalar, C64};

/// Largest `n` accepted by the full `n^2`-dimensional mode.
pub const FULL_MODE_LIMIT: usize = 64;
/// Largest edge count materialised by [`nb_dense`] in restricted mode.
pub const DENSE_EDGE_LIMIT: usize = 4096;

const NONE: usize = usize::MAX;

/// Directed support edges of `H`, indexed in row-major storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeIndex {
    n: usize,
    /// Tail vertex of each edge.
    from: Vec<usize>,
    /// Head vertex of each edge.
    to: Vec<usize>,
    /// `out_start[j]..out_start[j+1]` are the edges leaving `j`.
    out_start: Vec<usize>,
    /// Position of the reversed edge, or `NONE`.
    reverse: Vec<usize>,
}

impl EdgeIndex {
    pub fn new(h: &SparseMatrix) -> Self {
        let n = h.n();
        let mut from = Vec::with_capacity(h.nnz());
        let mut to = Vec::with_capacity(h.nnz());
        for (i, j, _) in h.iter() {
            from.push(i);
            to.push(j);
        }
        let reverse = from.iter().zip(&to).map(|(&i, &j)| h.position(j, i).unwrap_or(NONE)).collect();
        Self { n, from, to, out_start: h.row_ptr().to_vec(), reverse }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.from.len()
    }

    pub fn is_empty(&self) -> bool {
        self.from.is_empty()
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        (self.from[e], self.to[e])
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.from.iter().copied().zip(self.to.iter().copied())
    }

    pub fn lookup(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n {
            return None;
        }
        let r = self.out_start[i]..self.out_start[i + 1];
        self.to[r.clone()].binary_search(&j).ok().map(|p| r.start + p)
    }

    pub fn out_edges(&self, j: usize) -> core::ops::Range<usize> {
        self.out_start[j]..self.out_start[j + 1]
    }

    pub fn reverse(&self, e: usize) -> Option<usize> {
        let r = self.reverse[e];
        (r != NONE).then_some(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbMode {
    /// Vectors indexed by the `m` support edges.
    SupportRestricted,
    /// Vectors indexed by all `n^2` ordered pairs, `(i, j) -> i * n + j`.
    Full,
}

#[derive(Debug, Clone)]
pub struct NbOperator {
    h: SparseMatrix,
    index: EdgeIndex,
    mode: NbMode,
}

pub fn build_nb_operator(h: &SparseMatrix, mode: NbMode) -> Result<NbOperator> {
    if mode == NbMode::Full && h.n() > FULL_MODE_LIMIT {
        return Err(Error::FullModeTooLarge { n: h.n(), limit: FULL_MODE_LIMIT });
    }
    Ok(NbOperator { h: h.clone(), index: EdgeIndex::new(h), mode })
}

impl NbOperator {
    pub fn h(&self) -> &SparseMatrix {
        &self.h
    }

    pub fn index(&self) -> &EdgeIndex {
        &self.index
    }

    pub fn mode(&self) -> NbMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        match self.mode {
            NbMode::SupportRestricted => self.index.len(),
            NbMode::Full => self.h.n() * self.h.n(),
        }
    }

    /// Same operator in support-restricted mode.
    pub fn restricted(&self) -> NbOperator {
        NbOperator { h: self.h.clone(), index: self.index.clone(), mode: NbMode::SupportRestricted }
    }

    /// Entry value `H_e` of support edge `e`.
    pub fn weight(&self, e: usize) -> C64 {
        let (i, j) = self.index.edge(e);
        self.h.get(i, j)
    }

    fn weights<T: Scalar>(&self) -> Vec<T> {
        self.h.iter().map(|(_, _, v)| T::from_complex(v)).collect()
    }

    /// Per-vertex sums `S_j = sum_l H_jl x_(j,l)` over support edges.
    fn vertex_sums<T: Scalar>(&self, w: &[T], x_edge: impl Fn(usize) -> T) -> Vec<T> {
        let n = self.h.n();
        let mut s = vec![T::zero(); n];
        for (j, sj) in s.iter_mut().enumerate() {
            let mut acc = T::zero();
            for f in self.index.out_edges(j) {
                acc += w[f] * x_edge(f);
            }
            *sj = acc;
        }
        s
    }

    pub fn apply_into<T: Scalar>(&self, x: &[T], y: &mut [T]) -> Result<()> {
        let dim = self.dim();
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
        }
        if y.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: y.len() });
        }
        let w = self.weights::<T>();
        let n = self.h.n();
        match self.mode {
            NbMode::SupportRestricted => {
                let s = self.vertex_sums(&w, |f| x[f]);
                for (e, ye) in y.iter_mut().enumerate() {
                    let j = self.index.to[e];
                    let mut v = s[j];
                    if let Some(r) = self.index.reverse(e) {
                        v -= w[r] * x[r];
                    }
                    *ye = v;
                }
            }
            NbMode::Full => {
                let s = self.vertex_sums(&w, |f| {
                    let (j, l) = self.index.edge(f);
                    x[j * n + l]
                });
                for i in 0..n {
                    for j in 0..n {
                        let mut v = s[j];
                        if let Some(r) = self.index.lookup(j, i) {
                            v -= w[r] * x[j * n + i];
                        }
                        y[i * n + j] = v;
                    }
                }
            }
        }
        Ok(())
    }

    /// Reference `O(sum_j deg(j)^2)` product straight from the entry rule.
    pub fn apply_naive<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        let dim = self.dim();
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
        }
        let n = self.h.n();
        let mut y = vec![T::zero(); dim];
        match self.mode {
            NbMode::SupportRestricted => {
                for e in 0..self.index.len() {
                    let (i, j) = self.index.edge(e);
                    for f in 0..self.index.len() {
                        let (k, l) = self.index.edge(f);
                        if j == k && i != l {
                            y[e] += T::from_complex(self.weight(f)) * x[f];
                        }
                    }
                }
            }
            NbMode::Full => {
                for i in 0..n {
                    for j in 0..n {
                        for l in 0..n {
                            if l != i {
                                y[i * n + j] += T::from_complex(self.h.get(j, l)) * x[j * n + l];
                            }
                        }
                    }
                }
            }
        }
        Ok(y)
    }
}

impl<T: Scalar> LinearOp<T> for NbOperator {
    fn dim(&self) -> usize {
        NbOperator::dim(self)
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.apply_into(x, y).expect("vector length matches operator dimension");
    }
}

/// Restriction of `H` to the directed edges that lie on a bi-infinite nonbacktracking
/// walk. The other edges form nilpotent triangular blocks of `B`, so the nonzero
/// spectrum of `B` is unchanged while defective zero eigenvalues drop out. Empty when
/// `B` is nilpotent.
pub fn nb_core(h: &SparseMatrix) -> Result<SparseMatrix> {
    let idx = EdgeIndex::new(h);
    let (n, m) = (h.n(), idx.len());
    let mut in_edges = vec![Vec::new(); n];
    for e in 0..m {
        in_edges[idx.to[e]].push(e);
    }
    // The only excluded neighbour of an edge is its reverse.
    let rev = |e: usize| usize::from(idx.reverse(e).is_some());
    let mut succ: Vec<usize> = (0..m).map(|e| idx.out_edges(idx.to[e]).len() - rev(e)).collect();
    let mut pred: Vec<usize> = (0..m).map(|f| in_edges[idx.from[f]].len() - rev(f)).collect();
    let mut removed = vec![false; m];
    let mut stack: Vec<usize> = (0..m).filter(|&e| succ[e] == 0 || pred[e] == 0).collect();
    for &e in &stack {
        removed[e] = true;
    }
    while let Some(e) = stack.pop() {
        let (i, j) = idx.edge(e);
        for f in idx.out_edges(j) {
            if !removed[f] && idx.to[f] != i {
                pred[f] -= 1;
                if pred[f] == 0 {
                    removed[f] = true;
                    stack.push(f);
                }
            }
        }
        for &g in &in_edges[i] {
            if !removed[g] && idx.from[g] != j {
                succ[g] -= 1;
                if succ[g] == 0 {
                    removed[g] = true;
                    stack.push(g);
                }
            }
        }
    }
    let kept = h.iter().zip(&removed).filter(|(_, &r)| !r).map(|(t, _)| t);
    SparseMatrix::from_triplets(n, kept, h.is_hermitian())
}

/// `y = B x`.
pub fn nb_apply<T: Scalar>(op: &NbOperator, x: &[T]) -> Result<Vec<T>> {
    let mut y = vec![T::zero(); op.dim()];
    op.apply_into(x, &mut y)?;
    Ok(y)
}

/// Explicit matrix of `B`.
pub fn nb_dense(op: &NbOperator) -> Result<DenseMatrix<C64>> {
    let n = op.h.n();
    match op.mode {
        NbMode::SupportRestricted => {
            let m = op.index.len();
            if m > DENSE_EDGE_LIMIT {
                return Err(Error::SizeGuard { what: "dense nonbacktracking matrix", size: m as u128, limit: DENSE_EDGE_LIMIT as u128 });
            }
            let mut b = DenseMatrix::zeros(m, m);
            for e in 0..m {
                let (i, j) = op.index.edge(e);
                for f in op.index.out_edges(j) {
                    if op.index.to[f] != i {
                        b[(e, f)] = op.weight(f);
                    }
                }
            }
            Ok(b)
        }
        NbMode::Full => {
            if n > FULL_MODE_LIMIT {
                return Err(Error::FullModeTooLarge { n, limit: FULL_MODE_LIMIT });
            }
            let mut b = DenseMatrix::zeros(n * n, n * n);
            for (j, l, v) in op.h.iter() {
                for i in 0..n {
                    if i != l {
                        b[(i * n + j, j * n + l)] = v;
                    }
                }
            }
            Ok(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> SparseMatrix {
        SparseMatrix::from_edges(3, &[(0, 1), (1, 2), (0, 2)], 1.0).unwrap()
    }

    #[test]
    fn single_edge_is_zero() {
        let h = SparseMatrix::from_edges(2, &[(0, 1)], 1.0).unwrap();
        let op = build_nb_operator(&h, NbMode::SupportRestricted).unwrap();
        assert_eq!(op.dim(), 2);
        let b = nb_dense(&op).unwrap();
        assert!(b.as_slice().iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn triangle_is_two_three_cycles() {
        let op = build_nb_operator(&triangle(), NbMode::SupportRestricted).unwrap();
        let b = nb_dense(&op).unwrap();
        for e in 0..6 {
            let row: Vec<_> = (0..6).filter(|&f| b[(e, f)] != C64::new(0.0, 0.0)).collect();
            assert_eq!(row.len(), 1);
            let col: Vec<_> = (0..6).filter(|&f| b[(f, e)] != C64::new(0.0, 0.0)).collect();
            assert_eq!(col.len(), 1);
        }
        // B^3 = I.
        let b3 = b.matmul(&b).unwrap().matmul(&b).unwrap();
        assert_eq!(b3, DenseMatrix::identity(6));
        // Successor of (0,1) is (1,2).
        let e01 = op.index().lookup(0, 1).unwrap();
        let e12 = op.index().lookup(1, 2).unwrap();
        let mut x = vec![0.0; 6];
        x[e01] = 1.0;
        let y = nb_apply(&op, &x).unwrap();
        // y_e = sum_f B_ef x_f: the edge whose successor is (0,1) lights up.
        let e20 = op.index().lookup(2, 0).unwrap();
        assert_eq!(y.iter().filter(|&&v| v != 0.0).count(), 1);
        assert_eq!(y[e20], 1.0);
        assert_eq!(b[(e01, e12)], C64::new(1.0, 0.0));
    }

    #[test]
    fn k4_rows_have_two_ones() {
        let e: Vec<_> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).collect();
        let h = SparseMatrix::from_edges(4, &e, 1.0).unwrap();
        let op = build_nb_operator(&h, NbMode::SupportRestricted).unwrap();
        let b = nb_dense(&op).unwrap();
        assert_eq!(b.rows(), 12);
        for r in 0..12 {
            let s: f64 = (0..12).map(|c| b[(r, c)].re).sum();
            assert_eq!(s, 2.0);
        }
    }

    #[test]
    fn full_mode_guard_and_agreement() {
        let h = SparseMatrix::zeros(65, true);
        assert!(matches!(build_nb_operator(&h, NbMode::Full), Err(Error::FullModeTooLarge { .. })));
        let h = SparseMatrix::from_real_triplets(
            4,
            [(0, 1, 0.5), (1, 0, 0.5), (1, 2, -1.0), (2, 1, -1.0), (2, 3, 2.0), (3, 2, 2.0), (0, 3, 0.25), (3, 0, 0.25)],
            true,
        )
        .unwrap();
        let op = build_nb_operator(&h, NbMode::Full).unwrap();
        let x: Vec<C64> = (0..16).map(|k| C64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.05)).collect();
        let y = nb_apply(&op, &x).unwrap();
        let b = nb_dense(&op).unwrap();
        let yd = b.mul_vec(&x).unwrap();
        let yn = op.apply_naive(&x).unwrap();
        for k in 0..16 {
            assert!((y[k] - yd[k]).norm() < 1e-14);
            assert!((y[k] - yn[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_vector_maps_to_zero() {
        let op = build_nb_operator(&triangle(), NbMode::SupportRestricted).unwrap();
        let y = nb_apply(&op, &[C64::new(0.0, 0.0); 6]).unwrap();
        assert!(y.iter().all(|z| z.norm() == 0.0));
        assert!(nb_apply(&op, &[0.0f64; 5]).is_err());
    }

    #[test]
    fn core_prunes_trees_and_pendant_paths() {
        let star = SparseMatrix::from_edges(5, &[(0, 1), (0, 2), (0, 3), (3, 4)], 1.0).unwrap();
        assert_eq!(nb_core(&star).unwrap().nnz(), 0);
        // Triangle with a pendant path 2-3-4 keeps only the triangle.
        let h = SparseMatrix::from_edges(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)], 1.0).unwrap();
        let c = nb_core(&h).unwrap();
        assert_eq!(c, SparseMatrix::from_edges(5, &[(0, 1), (1, 2), (0, 2)], 1.0).unwrap());
        assert_eq!(nb_core(&triangle()).unwrap(), triangle());
        // A directed cycle survives; a directed edge into it does not.
        let d = SparseMatrix::from_real_triplets(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (3, 0, 1.0)], false).unwrap();
        assert_eq!(nb_core(&d).unwrap().nnz(), 3);
    }
}
