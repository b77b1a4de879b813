//! Seeded samplers for the random-matrix families.
//!
//! Every sample is a pure function of the ensemble description and a
//! [`SeedSpec`]: the generator is ChaCha8 keyed by the master seed, with the trial
//! index selecting an independent stream.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    derive_er_parameters, CenteredMatrix, EnsembleParams, EntryNorms, LinearOp, Profile, SparseMatrix,
    VarianceProfile,
};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    HermitianEr,
    DirectedEr,
    Sbm,
    Rademacher,
    CustomProfile,
}

impl EnsembleKind {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::HermitianEr => "hermitian-er",
            EnsembleKind::DirectedEr => "directed-er",
            EnsembleKind::Sbm => "sbm",
            EnsembleKind::Rademacher => "rademacher",
            EnsembleKind::CustomProfile => "custom-profile",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "hermitian-er" => EnsembleKind::HermitianEr,
            "directed-er" => EnsembleKind::DirectedEr,
            "sbm" => EnsembleKind::Sbm,
            "rademacher" => EnsembleKind::Rademacher,
            "custom-profile" => EnsembleKind::CustomProfile,
            _ => return None,
        })
    }

    pub fn is_hermitian(self) -> bool {
        !matches!(self, EnsembleKind::DirectedEr)
    }
}

/// Distributional description of a random matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    /// Edge probabilities (graph kinds) or the support pattern's profile.
    pub profile: Profile,
    /// Fixed support for the Rademacher kind.
    pub support: Option<SparseMatrix>,
    pub params: EnsembleParams,
    pub finite_support: bool,
}

impl EnsembleSpec {
    fn graph(kind: EnsembleKind, profile: Profile) -> Result<Self> {
        let params = derive_er_parameters(&profile)?;
        Ok(Self { kind, profile, support: None, params, finite_support: true })
    }

    /// `G(n, d/n)`.
    pub fn homogeneous_er(n: usize, d: f64) -> Result<Self> {
        Self::graph(EnsembleKind::HermitianEr, Profile::homogeneous(n, er_probability(n, d)?)?)
    }

    /// Directed `G(n, d/n)`.
    pub fn directed_er(n: usize, d: f64) -> Result<Self> {
        Self::graph(EnsembleKind::DirectedEr, Profile::homogeneous(n, er_probability(n, d)?)?)
    }

    pub fn inhomogeneous_er(profile: Profile) -> Result<Self> {
        if !profile.is_symmetric() {
            return Err(Error::InvalidParameter("hermitian ensemble needs a symmetric profile".into()));
        }
        Self::graph(EnsembleKind::HermitianEr, profile)
    }

    pub fn directed_profile(profile: Profile) -> Result<Self> {
        Self::graph(EnsembleKind::DirectedEr, profile)
    }

    pub fn sbm(block_sizes: &[usize], block_probs: &[f64]) -> Result<Self> {
        Self::graph(EnsembleKind::Sbm, build_sbm_profile(block_sizes, block_probs)?)
    }

    /// Custom profile: sampled like an inhomogeneous graph, `kappa` taken from the
    /// given profile rather than estimated.
    pub fn custom(profile: Profile) -> Result<Self> {
        let mut s = Self::inhomogeneous_er(profile)?;
        s.kind = EnsembleKind::CustomProfile;
        Ok(s)
    }

    /// Entries `±1/q` on the (symmetric, loop-free) support pattern of `support`.
    pub fn rademacher(support: &SparseMatrix, q: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
        }
        let pattern = support_pattern(support)?;
        let n = pattern.n();
        let max_deg = (0..n).map(|i| pattern.row(i).0.len()).max().unwrap_or(0) as f64;
        // The profile records the support indicator; kappa compares the entry variance
        // 1/q^2 with the maximal row variance sum deg/q^2, scaled by n.
        let kappa = if max_deg > 0.0 { n as f64 / max_deg } else { 1.0 };
        let mut p = alloc::vec![0.0; n * n];
        for (i, j, _) in pattern.iter() {
            p[i * n + j] = 1.0;
        }
        Ok(Self {
            kind: EnsembleKind::Rademacher,
            profile: Profile::dense(n, p)?,
            support: Some(pattern),
            params: EnsembleParams::explicit(n, q, kappa),
            finite_support: true,
        })
    }

    pub fn n(&self) -> usize {
        self.profile.n()
    }

    pub fn variance_profile(&self) -> VarianceProfile {
        match (&self.kind, &self.support) {
            (EnsembleKind::Rademacher, Some(s)) => {
                VarianceProfile::Support { support: s.clone(), variance: 1.0 / (self.params.q * self.params.q) }
            }
            _ => VarianceProfile::Centered { profile: self.profile.clone(), d: self.params.d },
        }
    }
}

fn er_probability(n: usize, d: f64) -> Result<f64> {
    if n < 2 || !(d > 0.0) {
        return Err(Error::InvalidParameter(format!("need n >= 2 and d > 0, got n = {n}, d = {d}")));
    }
    let p = d / n as f64;
    if p > 1.0 {
        return Err(Error::InvalidParameter(format!("d = {d} exceeds n = {n}")));
    }
    Ok(p)
}

fn support_pattern(support: &SparseMatrix) -> Result<SparseMatrix> {
    let mut t = Vec::with_capacity(support.nnz());
    for (i, j, _) in support.iter() {
        if i == j {
            return Err(Error::InvalidParameter(format!("support has a diagonal entry at {i}")));
        }
        if support.get(j, i) == crate::C64::new(0.0, 0.0) {
            return Err(Error::NotHermitian { row: i, col: j });
        }
        t.push((i, j, 1.0));
    }
    SparseMatrix::from_real_triplets(support.n(), t, true)
}

/// Identifies one trial's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self { master_seed, trial_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master_seed);
        r.set_stream(self.trial_index);
        r
    }

    /// A seed for a derived sub-stream (e.g. solver restarts of the same trial).
    pub fn child(&self, salt: u64) -> Self {
        let mixed = self.master_seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
        Self { master_seed: mixed, trial_index: self.trial_index }
    }
}

/// `p_ij = B[block(i)][block(j)]` with zero diagonal; `block_probs` is `k x k` row-major.
pub fn build_sbm_profile(block_sizes: &[usize], block_probs: &[f64]) -> Result<Profile> {
    let k = block_sizes.len();
    if k == 0 {
        return Err(Error::InvalidParameter("no blocks".into()));
    }
    if block_probs.len() != k * k {
        return Err(Error::DimensionMismatch { expected: k * k, got: block_probs.len() });
    }
    for a in 0..k {
        for b in 0..a {
            if block_probs[a * k + b] != block_probs[b * k + a] {
                return Err(Error::InvalidParameter(format!("block matrix not symmetric at ({a}, {b})")));
            }
        }
    }
    Profile::blocks(block_sizes.to_vec(), block_probs.to_vec())
}

/// One draw of a graph ensemble: adjacency and centered, scaled `H`.
#[derive(Debug, Clone)]
pub struct GraphSample {
    pub adjacency: SparseMatrix,
    pub h: CenteredMatrix,
}

fn block_index(profile: &Profile) -> Vec<usize> {
    (0..profile.n()).map(|i| profile.block_of(i)).collect()
}

fn sample_graph(spec: &EnsembleSpec, seed: SeedSpec, directed: bool) -> Result<GraphSample> {
    let n = spec.n();
    let d = spec.params.d;
    if !(d > 0.0) {
        return Err(Error::DegenerateProfile);
    }
    let mut rng = seed.rng();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let blocks = block_index(&spec.profile);
    let prob = |i: usize, j: usize| -> f64 {
        match &spec.profile {
            Profile::Homogeneous { p, .. } => *p,
            Profile::Blocks { sizes, probs, .. } => probs[blocks[i] * sizes.len() + blocks[j]],
            Profile::Dense { .. } => spec.profile.p(i, j),
        }
    };
    let mut draw = |p: f64| -> bool {
        if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            rng.random::<f64>() < p
        }
    };
    for i in 0..n {
        let start = if directed { 0 } else { i + 1 };
        for j in start..n {
            if i == j {
                continue;
            }
            if draw(prob(i, j)) {
                edges.push((i, j, 1.0));
                if !directed {
                    edges.push((j, i, 1.0));
                }
            }
        }
    }
    let adjacency = SparseMatrix::from_real_triplets(n, edges, !directed)?;
    let h = CenteredMatrix::new(adjacency.clone(), spec.profile.clone(), d)?;
    Ok(GraphSample { adjacency, h })
}

/// Symmetric `A` with independent `A_ij ~ Bernoulli(p_ij)` for `i < j`, and
/// `H = d^{-1/2} (A - P)`.
pub fn sample_inhomogeneous_er(spec: &EnsembleSpec, seed: SeedSpec) -> Result<GraphSample> {
    match spec.kind {
        EnsembleKind::HermitianEr | EnsembleKind::Sbm | EnsembleKind::CustomProfile => sample_graph(spec, seed, false),
        k => Err(Error::InvalidParameter(format!("{} is not a hermitian graph ensemble", k.name()))),
    }
}

/// All ordered pairs sampled independently.
pub fn sample_directed_er(spec: &EnsembleSpec, seed: SeedSpec) -> Result<GraphSample> {
    match spec.kind {
        EnsembleKind::DirectedEr => sample_graph(spec, seed, true),
        k => Err(Error::InvalidParameter(format!("{} is not a directed ensemble", k.name()))),
    }
}

/// Hermitian `H_ij = sigma_ij / q` with independent uniform signs for `i < j` on the
/// support pattern.
pub fn sample_rademacher(support: &SparseMatrix, q: f64, seed: SeedSpec) -> Result<SparseMatrix> {
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    let pattern = support_pattern(support)?;
    let mut rng = seed.rng();
    let v = 1.0 / q;
    let mut t = Vec::with_capacity(pattern.nnz());
    for (i, j, _) in pattern.iter() {
        if i < j {
            let s = if rng.random::<bool>() { v } else { -v };
            t.push((i, j, s));
            t.push((j, i, s));
        }
    }
    SparseMatrix::from_real_triplets(pattern.n(), t, true)
}

/// A realisation of any supported ensemble.
#[derive(Debug, Clone)]
pub enum Sample {
    Graph(GraphSample),
    Explicit(SparseMatrix),
}

impl Sample {
    pub fn n(&self) -> usize {
        match self {
            Sample::Graph(g) => g.h.n(),
            Sample::Explicit(h) => h.n(),
        }
    }

    pub fn norms(&self) -> (f64, f64) {
        match self {
            Sample::Graph(g) => (g.h.norm_2_to_inf(), g.h.norm_1_to_inf()),
            Sample::Explicit(h) => (h.norm_2_to_inf(), h.norm_1_to_inf()),
        }
    }

    /// Explicit `H`; graph samples are materialised (guarded at `limit`).
    pub fn h_sparse(&self, limit: usize) -> Result<SparseMatrix> {
        match self {
            Sample::Graph(g) => g.h.to_sparse(limit),
            Sample::Explicit(h) => Ok(h.clone()),
        }
    }

    pub fn apply<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        match self {
            Sample::Graph(g) => LinearOp::apply(&g.h, x, y),
            Sample::Explicit(h) => LinearOp::apply(h, x, y),
        }
    }
}

pub fn sample(spec: &EnsembleSpec, seed: SeedSpec) -> Result<Sample> {
    Ok(match spec.kind {
        EnsembleKind::DirectedEr => Sample::Graph(sample_directed_er(spec, seed)?),
        EnsembleKind::Rademacher => {
            let s = spec.support.as_ref().ok_or_else(|| Error::InvalidParameter("rademacher without support".into()))?;
            Sample::Explicit(sample_rademacher(s, spec.params.q, seed)?)
        }
        _ => Sample::Graph(sample_inhomogeneous_er(spec, seed)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_assumptions;
    use approx::assert_relative_eq;

    #[test]
    fn reproducible_and_distinct_streams() {
        let spec = EnsembleSpec::homogeneous_er(200, 5.0).unwrap();
        let a = sample_inhomogeneous_er(&spec, SeedSpec::new(7, 3)).unwrap();
        let b = sample_inhomogeneous_er(&spec, SeedSpec::new(7, 3)).unwrap();
        let c = sample_inhomogeneous_er(&spec, SeedSpec::new(7, 4)).unwrap();
        assert_eq!(a.adjacency, b.adjacency);
        assert_ne!(a.adjacency, c.adjacency);
    }

    #[test]
    fn complete_graph_is_deterministic() {
        let spec = EnsembleSpec::homogeneous_er(6, 6.0).unwrap();
        let s = sample_inhomogeneous_er(&spec, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(s.adjacency.nnz(), 30);
        assert_eq!(s.h.to_sparse(64).unwrap().nnz(), 0);
    }

    #[test]
    fn two_vertex_moments() {
        // p = 1/2, d = 1/2: H_12 = ±(1/2)/sqrt(1/2), E H = 0, E H^2 = p(1-p)/d = 1/2.
        let spec = EnsembleSpec::homogeneous_er(2, 1.0).unwrap();
        assert_relative_eq!(spec.params.d, 0.5);
        let draws = 100_000u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for t in 0..draws {
            let g = sample_inhomogeneous_er(&spec, SeedSpec::new(11, t)).unwrap();
            let h = g.h.entry(0, 1);
            s1 += h;
            s2 += h * h;
        }
        let mean = s1 / draws as f64;
        let var = s2 / draws as f64;
        // sd of a single draw is 1/sqrt(2); of H^2 it is 0 (H^2 is constant).
        assert!(mean.abs() < 5.0 * (0.5f64 / draws as f64).sqrt(), "mean {mean}");
        assert_relative_eq!(var, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn mean_degree_concentrates() {
        let n = 2000;
        let spec = EnsembleSpec::homogeneous_er(n, 50.0).unwrap();
        let g = sample_inhomogeneous_er(&spec, SeedSpec::new(5, 0)).unwrap();
        let mean = g.adjacency.nnz() as f64 / n as f64;
        let p = 50.0 / n as f64;
        // Total edge count ~ Binomial(n(n-1)/2, p); mean degree = 2 E / n.
        let pairs = (n * (n - 1) / 2) as f64;
        let sd = 2.0 * (pairs * p * (1.0 - p)).sqrt() / n as f64;
        let expected = (n - 1) as f64 * p;
        assert!((mean - expected).abs() < 3.0 * sd, "{mean} vs {expected} ± {sd}");
    }

    #[test]
    fn directed_sample_is_not_symmetric_and_bounded() {
        let spec = EnsembleSpec::directed_er(500, 20.0).unwrap();
        let g = sample_directed_er(&spec, SeedSpec::new(3, 0)).unwrap();
        assert!(!g.adjacency.is_hermitian());
        let asym = g.adjacency.iter().any(|(i, j, _)| g.adjacency.get(j, i).re == 0.0);
        assert!(asym);
        assert!(g.h.norm_1_to_inf() <= 1.0 / spec.params.d.sqrt());
    }

    #[test]
    fn er_sample_meets_assumptions() {
        let spec = EnsembleSpec::homogeneous_er(300, 10.0).unwrap();
        let g = sample_inhomogeneous_er(&spec, SeedSpec::new(9, 1)).unwrap();
        let r = validate_assumptions(&g.h, &spec.params, &spec.variance_profile());
        assert!(r.all_passed(), "{r:?}");
        let p = 10.0 / 300.0;
        assert_relative_eq!(r.conditions[0].attained, 299.0 * p * (1.0 - p) / spec.params.d, epsilon = 1e-12);
    }

    #[test]
    fn rademacher_triangle_and_k4() {
        let tri = SparseMatrix::from_edges(3, &[(0, 1), (1, 2), (0, 2)], 1.0).unwrap();
        let spec = EnsembleSpec::rademacher(&tri, 2f64.sqrt()).unwrap();
        let h = sample_rademacher(&tri, 2f64.sqrt(), SeedSpec::new(0, 0)).unwrap();
        assert!(h.is_hermitian());
        let r = validate_assumptions(&h, &spec.params, &spec.variance_profile());
        assert!(r.all_passed());
        assert_relative_eq!(r.conditions[0].attained, 1.0, epsilon = 1e-15);

        let k4: Vec<_> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).collect();
        let k4 = SparseMatrix::from_edges(4, &k4, 1.0).unwrap();
        let spec = EnsembleSpec::rademacher(&k4, 3f64.sqrt()).unwrap();
        let h = sample_rademacher(&k4, 3f64.sqrt(), SeedSpec::new(0, 1)).unwrap();
        let r = validate_assumptions(&h, &spec.params, &spec.variance_profile());
        assert!(r.all_passed(), "{r:?}");
        assert_relative_eq!(r.conditions[0].attained, 1.0, epsilon = 1e-15);

        let empty = SparseMatrix::zeros(3, true);
        assert_eq!(sample_rademacher(&empty, 1.0, SeedSpec::new(0, 0)).unwrap().nnz(), 0);
    }

    #[test]
    fn sbm_profiles() {
        let one = build_sbm_profile(&[5], &[0.3]).unwrap();
        assert_eq!(one.p(0, 4), 0.3);
        assert_eq!(one.p(2, 2), 0.0);
        let two = build_sbm_profile(&[2, 2], &[0.5, 0.1, 0.1, 0.5]).unwrap();
        let e = derive_er_parameters(&two).unwrap();
        // row sum: 0.5 (same block, one partner) + 2 * 0.1.
        assert_relative_eq!(e.d, 0.7, epsilon = 1e-15);
        assert_relative_eq!(e.kappa, 0.5 / (0.7 / 4.0), epsilon = 1e-12);
        assert!(build_sbm_profile(&[2, 2], &[0.5, 0.1, 0.2, 0.5]).is_err());
        assert!(build_sbm_profile(&[2, 2], &[0.5, 0.1]).is_err());
        let zero = build_sbm_profile(&[2, 2], &[0.0; 4]).unwrap();
        assert_eq!(derive_er_parameters(&zero), Err(Error::DegenerateProfile));
    }
}
