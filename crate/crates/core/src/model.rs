//! Matrix types, entrywise norms and ensemble parameters.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dense::DenseMatrix;
use crate::{Error, Result, Scalar};

/// Square complex matrix in compressed-row form. Stored entries are exactly the
/// support: zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets (0-based). Duplicates are summed and
    /// entries that end up exactly zero are dropped. With `hermitian` set, every
    /// stored `(i, j, v)` must be matched by `(j, i, conj(v))`.
    pub fn from_triplets<I>(n: usize, entries: I, hermitian: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut map: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { row: i, col: j, n });
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite entry at ({i}, {j})")));
            }
            *map.entry((i, j)).or_insert(C64::new(0.0, 0.0)) += v;
        }
        map.retain(|_, v| *v != C64::new(0.0, 0.0));
        if hermitian {
            for (&(i, j), &v) in &map {
                if map.get(&(j, i)) != Some(&v.conj()) {
                    return Err(Error::NotHermitian { row: i, col: j });
                }
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(map.len());
        let mut vals = Vec::with_capacity(map.len());
        for (&(i, j), &v) in &map {
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n, row_ptr, cols, vals, hermitian })
    }

    pub fn from_real_triplets<I>(n: usize, entries: I, hermitian: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::from_triplets(n, entries.into_iter().map(|(i, j, v)| (i, j, C64::new(v, 0.0))), hermitian)
    }

    /// Symmetric matrix with `value` on both orientations of every listed edge.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], value: f64) -> Result<Self> {
        let mut t = Vec::with_capacity(2 * edges.len());
        for &(i, j) in edges {
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at {i}")));
            }
            t.push((i, j, value));
            t.push((j, i, value));
        }
        Self::from_real_triplets(n, t, true)
    }

    pub fn zeros(n: usize, hermitian: bool) -> Self {
        Self { n, row_ptr: vec![0; n + 1], cols: Vec::new(), vals: Vec::new(), hermitian }
    }

    pub fn from_dense(a: &DenseMatrix<C64>, hermitian: bool) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
        }
        let n = a.rows();
        Self::from_triplets(n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, a[(i, j)])), hermitian)
    }

    pub fn to_dense(&self) -> DenseMatrix<C64> {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v;
        }
        d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    /// Column indices and values of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i >= self.n {
            return C64::new(0.0, 0.0);
        }
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(p) => v[p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Position of `(i, j)` in the flat storage order, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n {
            return None;
        }
        let (c, _) = self.row(i);
        c.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    /// Stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn mul_vec<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let mut y = vec![T::zero(); self.n];
        LinearOp::apply(self, x, &mut y);
        Ok(y)
    }

    /// `P H P^T` for the permutation sending `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: perm.len() });
        }
        Self::from_triplets(self.n, self.iter().map(|(i, j, v)| (perm[i], perm[j], v)), self.hermitian)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= s;
        }
        if s == 0.0 {
            return Self::zeros(self.n, self.hermitian);
        }
        out
    }

    /// Squared Euclidean length of each row.
    pub fn row_sq_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().map(|v| v.norm_sqr()).sum()).collect()
    }
}

/// Square operator acting on vectors of scalar type `T`.
pub trait LinearOp<T: Scalar> {
    fn dim(&self) -> usize;
    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[T], y: &mut [T]);
}

impl<T: Scalar> LinearOp<T> for SparseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    /// For `T = f64` the imaginary parts of stored entries are ignored; callers check
    /// `is_real` first.
    fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            let mut s = T::zero();
            for (&j, &h) in c.iter().zip(v) {
                s += T::from_complex(h) * x[j];
            }
            *yi = s;
        }
    }
}

/// Entrywise norms shared by explicit and structured matrices.
pub trait EntryNorms {
    fn dim(&self) -> usize;
    /// Maximum Euclidean row length.
    fn norm_2_to_inf(&self) -> f64;
    /// Maximum entry modulus.
    fn norm_1_to_inf(&self) -> f64;
}

impl EntryNorms for SparseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn norm_2_to_inf(&self) -> f64 {
        self.row_sq_sums().into_iter().fold(0.0, f64::max).sqrt()
    }

    fn norm_1_to_inf(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `max_i (sum_j |H_ij|^2)^{1/2}`.
pub fn norm_2_to_inf<M: EntryNorms + ?Sized>(h: &M) -> f64 {
    h.norm_2_to_inf()
}

/// `max_{i,j} |H_ij|`.
pub fn norm_1_to_inf<M: EntryNorms + ?Sized>(h: &M) -> f64 {
    h.norm_1_to_inf()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub norm2inf: f64,
    pub norm1inf: f64,
    pub opnorm: Option<f64>,
}

pub fn norm_report<M: EntryNorms + ?Sized>(h: &M) -> NormReport {
    NormReport { norm2inf: h.norm_2_to_inf(), norm1inf: h.norm_1_to_inf(), opnorm: None }
}

/// Edge-probability profile `P` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `p_ij = p` for all `i != j`.
    Homogeneous { n: usize, p: f64 },
    /// Block-constant profile: `p_ij = probs[a * k + b]` for `i` in block `a`, `j` in
    /// block `b` (row-major `k x k`). Need not be symmetric for directed use.
    Blocks { sizes: Vec<usize>, probs: Vec<f64>, starts: Vec<usize> },
    /// Explicit row-major `n x n` profile; diagonal is ignored.
    Dense { n: usize, p: Vec<f64> },
}

impl Profile {
    pub fn homogeneous(n: usize, p: f64) -> Result<Self> {
        check_prob(p)?;
        Ok(Profile::Homogeneous { n, p })
    }

    pub fn blocks(sizes: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let k = sizes.len();
        if probs.len() != k * k {
            return Err(Error::DimensionMismatch { expected: k * k, got: probs.len() });
        }
        for &p in &probs {
            check_prob(p)?;
        }
        let mut starts = Vec::with_capacity(k + 1);
        let mut acc = 0;
        starts.push(0);
        for &s in &sizes {
            acc += s;
            starts.push(acc);
        }
        Ok(Profile::Blocks { sizes, probs, starts })
    }

    pub fn dense(n: usize, mut p: Vec<f64>) -> Result<Self> {
        if p.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: p.len() });
        }
        for &x in &p {
            check_prob(x)?;
        }
        for i in 0..n {
            p[i * n + i] = 0.0;
        }
        Ok(Profile::Dense { n, p })
    }

    pub fn n(&self) -> usize {
        match self {
            Profile::Homogeneous { n, .. } | Profile::Dense { n, .. } => *n,
            Profile::Blocks { starts, .. } => *starts.last().unwrap_or(&0),
        }
    }

    pub fn block_of(&self, i: usize) -> usize {
        match self {
            Profile::Blocks { starts, .. } => starts.partition_point(|&s| s <= i) - 1,
            _ => 0,
        }
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match self {
            Profile::Homogeneous { p, .. } => *p,
            Profile::Blocks { sizes, probs, .. } => probs[self.block_of(i) * sizes.len() + self.block_of(j)],
            Profile::Dense { n, p } => p[i * n + j],
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            Profile::Homogeneous { .. } => true,
            Profile::Blocks { sizes, probs, .. } => {
                let k = sizes.len();
                (0..k).all(|a| (0..k).all(|b| probs[a * k + b] == probs[b * k + a]))
            }
            Profile::Dense { n, p } => (0..*n).all(|i| (0..i).all(|j| p[i * n + j] == p[j * n + i])),
        }
    }

    /// `sum_{j != i} g(p_ij)` for every row, computed per block where possible.
    pub fn row_sums_with(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        match self {
            Profile::Homogeneous { n, p } => vec![(n.saturating_sub(1)) as f64 * g(*p); *n],
            Profile::Blocks { sizes, probs, .. } => {
                let k = sizes.len();
                let per_block: Vec<f64> = (0..k)
                    .map(|a| {
                        let full: f64 = (0..k).map(|b| sizes[b] as f64 * g(probs[a * k + b])).sum();
                        full - g(probs[a * k + a])
                    })
                    .collect();
                let mut out = Vec::with_capacity(self.n());
                for (a, &s) in sizes.iter().enumerate() {
                    out.extend(core::iter::repeat_n(per_block[a], s));
                }
                out
            }
            Profile::Dense { n, p } => (0..*n)
                .map(|i| (0..*n).filter(|&j| j != i).map(|j| g(p[i * n + j])).sum())
                .collect(),
        }
    }

    /// `max_{i != j} g(p_ij)` over pairs that exist (no pairs gives 0).
    pub fn max_entry_with(&self, g: impl Fn(f64) -> f64) -> f64 {
        match self {
            Profile::Homogeneous { n, p } => {
                if *n >= 2 {
                    g(*p)
                } else {
                    0.0
                }
            }
            Profile::Blocks { sizes, probs, .. } => {
                let k = sizes.len();
                let mut m = 0.0f64;
                for a in 0..k {
                    for b in 0..k {
                        let pairs = if a == b { sizes[a] * sizes[a].saturating_sub(1) } else { sizes[a] * sizes[b] };
                        if pairs > 0 {
                            m = m.max(g(probs[a * k + b]));
                        }
                    }
                }
                m
            }
            Profile::Dense { n, p } => {
                let mut m = 0.0f64;
                for i in 0..*n {
                    for j in 0..*n {
                        if i != j {
                            m = m.max(g(p[i * n + j]));
                        }
                    }
                }
                m
            }
        }
    }

    /// `P x` (zero diagonal).
    pub fn apply<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        match self {
            Profile::Homogeneous { p, .. } => {
                let s = x.iter().fold(T::zero(), |a, &b| a + b);
                for (yi, &xi) in y.iter_mut().zip(x) {
                    *yi = (s - xi).scale(*p);
                }
            }
            Profile::Blocks { sizes, probs, starts } => {
                let k = sizes.len();
                let sums: Vec<T> = (0..k)
                    .map(|b| x[starts[b]..starts[b + 1]].iter().fold(T::zero(), |a, &v| a + v))
                    .collect();
                for a in 0..k {
                    let mut base = T::zero();
                    for b in 0..k {
                        base += sums[b].scale(probs[a * k + b]);
                    }
                    let paa = probs[a * k + a];
                    for i in starts[a]..starts[a + 1] {
                        y[i] = base - x[i].scale(paa);
                    }
                }
            }
            Profile::Dense { n, p } => {
                for i in 0..*n {
                    let mut s = T::zero();
                    for j in 0..*n {
                        if j != i {
                            s += x[j].scale(p[i * n + j]);
                        }
                    }
                    y[i] = s;
                }
            }
        }
    }
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")))
    }
}

/// Sparsity scale and structure parameters of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    pub n: usize,
    /// Maximal expected degree.
    pub d: f64,
    pub kappa: f64,
    /// `min(sqrt(d), n^(1/13) kappa^(-1/12))`.
    pub q: f64,
    /// `sqrt(d)`.
    pub q_raw: f64,
}

impl EnsembleParams {
    /// Parameters with an explicitly chosen scale (used for Rademacher and custom
    /// profiles where `d` is not a degree).
    pub fn explicit(n: usize, q: f64, kappa: f64) -> Self {
        Self { n, d: q * q, kappa, q, q_raw: q }
    }
}

pub fn capped_q(n: usize, d: f64, kappa: f64) -> f64 {
    d.sqrt().min((n as f64).powf(1.0 / 13.0) * kappa.powf(-1.0 / 12.0))
}

pub fn derive_er_parameters(p: &Profile) -> Result<EnsembleParams> {
    let n = p.n();
    let d = p.row_sums_with(|x| x).into_iter().fold(0.0, f64::max);
    if d <= 0.0 {
        return Err(Error::DegenerateProfile);
    }
    let kappa = p.max_entry_with(|x| x) / (d / n as f64);
    Ok(EnsembleParams { n, d, kappa, q: capped_q(n, d, kappa), q_raw: d.sqrt() })
}

/// Entry variances `E|H_ij|^2` of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum VarianceProfile {
    /// Centered Bernoulli scaled by `d^{-1/2}`: `p(1 - p) / d`.
    Centered { profile: Profile, d: f64 },
    /// Constant variance on a fixed support pattern (the values of `support` are
    /// ignored).
    Support { support: SparseMatrix, variance: f64 },
    Zero { n: usize },
}

impl VarianceProfile {
    pub fn max_row_sum(&self) -> f64 {
        match self {
            VarianceProfile::Centered { profile, d } => {
                profile.row_sums_with(|p| p * (1.0 - p) / d).into_iter().fold(0.0, f64::max)
            }
            VarianceProfile::Support { support, variance } => {
                (0..support.n()).map(|i| support.row(i).0.len() as f64 * variance).fold(0.0, f64::max)
            }
            VarianceProfile::Zero { .. } => 0.0,
        }
    }

    pub fn max_entry(&self) -> f64 {
        match self {
            VarianceProfile::Centered { profile, d } => profile.max_entry_with(|p| p * (1.0 - p) / d),
            VarianceProfile::Support { support, variance } => {
                if support.nnz() > 0 {
                    *variance
                } else {
                    0.0
                }
            }
            VarianceProfile::Zero { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: String,
    pub attained: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Row variance sum, entry variance, almost-sure entry bound (in that order).
    pub conditions: Vec<ConditionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }
}

const REL_SLACK: f64 = 1e-12;

fn check(name: &str, attained: f64, bound: f64) -> ConditionCheck {
    ConditionCheck {
        name: String::from(name),
        attained,
        bound,
        passed: attained <= bound * (1.0 + REL_SLACK) + REL_SLACK * f64::MIN_POSITIVE.sqrt(),
    }
}

/// Checks the three moment/size conditions: variance row sums against the profile,
/// maximal entry variance against `kappa / n`, and the realised entries against `1/q`.
pub fn validate_assumptions<M: EntryNorms + ?Sized>(
    h: &M,
    params: &EnsembleParams,
    variance: &VarianceProfile,
) -> AssumptionReport {
    let n = h.dim().max(1) as f64;
    let entry_bound = if params.q > 0.0 { 1.0 / params.q } else { f64::INFINITY };
    AssumptionReport {
        conditions: vec![
            check("row-variance", variance.max_row_sum(), 1.0),
            check("entry-variance", variance.max_entry(), params.kappa / n),
            check("entry-bound", h.norm_1_to_inf(), entry_bound),
        ],
    }
}

/// `H = d^{-1/2} (A - P)` held as a sparse 0/1 adjacency plus a structured profile,
/// so that matrix-vector products cost `O(nnz(A) + n)` for block profiles.
#[derive(Debug, Clone)]
pub struct CenteredMatrix {
    adjacency: SparseMatrix,
    profile: Profile,
    d: f64,
    scale: f64,
}

impl CenteredMatrix {
    /// `adjacency` must be 0/1 with support inside the support of `profile`.
    pub fn new(adjacency: SparseMatrix, profile: Profile, d: f64) -> Result<Self> {
        if adjacency.n() != profile.n() {
            return Err(Error::DimensionMismatch { expected: profile.n(), got: adjacency.n() });
        }
        if d <= 0.0 {
            return Err(Error::DegenerateProfile);
        }
        Ok(Self { adjacency, profile, d, scale: 1.0 / d.sqrt() })
    }

    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn is_hermitian(&self) -> bool {
        self.adjacency.is_hermitian() && self.profile.is_symmetric()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        (self.adjacency.get(i, j).re - self.profile.p(i, j)) * self.scale
    }

    /// Squared row lengths `sum_j |H_ij|^2`.
    pub fn row_sq_sums(&self) -> Vec<f64> {
        let base = self.profile.row_sums_with(|p| p * p);
        let s2 = self.scale * self.scale;
        base.into_iter()
            .enumerate()
            .map(|(i, b)| {
                let (c, _) = self.adjacency.row(i);
                let corr: f64 = c.iter().map(|&j| 1.0 - 2.0 * self.profile.p(i, j)).sum();
                (b + corr).max(0.0) * s2
            })
            .collect()
    }

    /// Materialises `H` (exact zeros dropped). Guarded at `n <= limit`.
    pub fn to_sparse(&self, limit: usize) -> Result<SparseMatrix> {
        let n = self.n();
        if n > limit {
            return Err(Error::SizeGuard { what: "centered matrix materialisation", size: n as u128, limit: limit as u128 });
        }
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let v = self.entry(i, j);
                    if v != 0.0 {
                        t.push((i, j, v));
                    }
                }
            }
        }
        SparseMatrix::from_real_triplets(n, t, self.is_hermitian())
    }

    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let n = self.n();
        DenseMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { self.entry(i, j) })
    }
}

impl<T: Scalar> LinearOp<T> for CenteredMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.profile.apply(x, y);
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.adjacency.row(i);
            let mut s = T::zero();
            for (&j, &a) in c.iter().zip(v) {
                s += x[j].scale(a.re);
            }
            *yi = (s - *yi).scale(self.scale);
        }
    }
}

impl EntryNorms for CenteredMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn norm_2_to_inf(&self) -> f64 {
        self.row_sq_sums().into_iter().fold(0.0, f64::max).sqrt()
    }

    fn norm_1_to_inf(&self) -> f64 {
        let n = self.n();
        let mut best = 0.0f64;
        // Realised edges contribute 1 - p_ij.
        for (i, j, _) in self.adjacency.iter() {
            best = best.max((1.0 - self.profile.p(i, j)).abs());
        }
        // Non-edges contribute p_ij; only pairs that are actually absent count.
        match &self.profile {
            Profile::Homogeneous { p, .. } => {
                let missing = (0..n).any(|i| self.adjacency.row(i).0.len() + 1 < n);
                if missing && n >= 2 {
                    best = best.max(*p);
                }
            }
            Profile::Blocks { sizes, probs, .. } => {
                let k = sizes.len();
                let mut edges = vec![0usize; k * k];
                for (i, j, _) in self.adjacency.iter() {
                    edges[self.profile.block_of(i) * k + self.profile.block_of(j)] += 1;
                }
                for a in 0..k {
                    for b in 0..k {
                        let pairs = if a == b { sizes[a] * sizes[a].saturating_sub(1) } else { sizes[a] * sizes[b] };
                        if pairs > edges[a * k + b] {
                            best = best.max(probs[a * k + b]);
                        }
                    }
                }
            }
            Profile::Dense { .. } => {
                for i in 0..n {
                    for j in 0..n {
                        if i != j && self.adjacency.get(i, j) == C64::new(0.0, 0.0) {
                            best = best.max(self.profile.p(i, j));
                        }
                    }
                }
            }
        }
        best * self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn norms_trivial() {
        let h = SparseMatrix::from_edges(2, &[(0, 1)], 1.0).unwrap();
        assert_eq!(norm_2_to_inf(&h), 1.0);
        let t = SparseMatrix::from_edges(3, &[(0, 1), (1, 2), (0, 2)], 1.0).unwrap();
        assert_relative_eq!(norm_2_to_inf(&t), 2f64.sqrt());
        assert_eq!(norm_1_to_inf(&SparseMatrix::zeros(4, true)), 0.0);
        let s = 0.5f64.sqrt();
        let t = SparseMatrix::from_edges(3, &[(0, 1), (1, 2), (0, 2)], s).unwrap();
        assert_eq!(norm_1_to_inf(&t), s);
    }

    #[test]
    fn hermitian_check_rejects_asymmetric() {
        let r = SparseMatrix::from_real_triplets(2, [(0, 1, 1.0)], true);
        assert_eq!(r, Err(Error::NotHermitian { row: 0, col: 1 }));
        let z = SparseMatrix::from_real_triplets(2, [(0, 1, 1.0), (0, 1, -1.0)], true).unwrap();
        assert_eq!(z.nnz(), 0);
    }

    #[test]
    fn er_parameters_homogeneous() {
        let p = Profile::homogeneous(1000, 50.0 / 1000.0).unwrap();
        let e = derive_er_parameters(&p).unwrap();
        assert_relative_eq!(e.d, 49.95, epsilon = 1e-10);
        assert_relative_eq!(e.kappa, 1000.0 * 0.05 / 49.95, epsilon = 1e-12);
        let q = (1000f64).powf(1.0 / 13.0) * e.kappa.powf(-1.0 / 12.0);
        assert_relative_eq!(e.q, q, epsilon = 1e-12);
        assert!((e.q - 1.70).abs() < 0.01);
        assert_relative_eq!(e.q_raw, 49.95f64.sqrt());
    }

    #[test]
    fn er_parameters_single_pair_and_degenerate() {
        let n = 5;
        let mut v = vec![0.0; n * n];
        v[1] = 1.0;
        v[n] = 1.0;
        let e = derive_er_parameters(&Profile::dense(n, v).unwrap()).unwrap();
        assert_eq!(e.d, 1.0);
        assert_eq!(e.kappa, n as f64);
        assert_eq!(derive_er_parameters(&Profile::homogeneous(4, 0.0).unwrap()), Err(Error::DegenerateProfile));
    }

    #[test]
    fn sbm_profile_four_vertices() {
        // p_in = 0.4, p_out = 0.2 on blocks {0,1}, {2,3}: row sum = 0.4 + 2*0.2 = 0.8.
        let p = Profile::blocks(vec![2, 2], vec![0.4, 0.2, 0.2, 0.4]).unwrap();
        let e = derive_er_parameters(&p).unwrap();
        assert_relative_eq!(e.d, 0.8, epsilon = 1e-15);
        assert_relative_eq!(e.kappa, 0.4 / (0.8 / 4.0), epsilon = 1e-12);
    }

    #[test]
    fn assumption_report_violation() {
        let params = EnsembleParams::explicit(3, 2.0, 1.0);
        let h = SparseMatrix::from_edges(3, &[(0, 1)], 2.0 / 2.0).unwrap();
        let var = VarianceProfile::Zero { n: 3 };
        let r = validate_assumptions(&h, &params, &var);
        assert!(!r.conditions[2].passed);
        assert!(r.conditions[0].passed && r.conditions[1].passed);
        let r0 = validate_assumptions(&SparseMatrix::zeros(3, true), &params, &var);
        assert!(r0.all_passed());
    }

    #[test]
    fn centered_structural_matches_materialised() {
        let n = 7;
        let profile = Profile::blocks(vec![3, 4], vec![0.5, 0.25, 0.25, 0.75]).unwrap();
        let adj = SparseMatrix::from_edges(n, &[(0, 1), (1, 2), (2, 5), (3, 4), (4, 6), (5, 6), (0, 6)], 1.0).unwrap();
        let c = CenteredMatrix::new(adj, profile, 2.0).unwrap();
        let s = c.to_sparse(64).unwrap();
        assert_relative_eq!(c.norm_2_to_inf(), s.norm_2_to_inf(), epsilon = 1e-14);
        assert_relative_eq!(c.norm_1_to_inf(), s.norm_1_to_inf(), epsilon = 1e-14);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut y = vec![0.0; n];
        LinearOp::apply(&c, &x, &mut y);
        let y2 = s.mul_vec(&x).unwrap();
        for (a, b) in y.iter().zip(&y2) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn complete_graph_centers_to_zero() {
        let n = 5;
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let adj = SparseMatrix::from_edges(n, &edges, 1.0).unwrap();
        let c = CenteredMatrix::new(adj, Profile::homogeneous(n, 1.0).unwrap(), 4.0).unwrap();
        assert_eq!(c.to_sparse(64).unwrap().nnz(), 0);
        assert_eq!(c.norm_1_to_inf(), 0.0);
    }
}
