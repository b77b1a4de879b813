//! Exact trace-moment oracles on finite-support ensembles, the per-class bound, and the
//! moment envelope fit.
//!
//! Entries are `H_ij = sqrt(scale2) * v_ij` where each `v_ij` takes finitely many
//! rational values. Every trace moment of order `2l` is then `scale2^l` times a
//! rational number, so all oracles here are exact.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, Signed, Zero};

use super::{for_each_path, WalkMode, WalkPath};
use crate::ensembles::{EnsembleKind, EnsembleSpec};
use crate::{Error, Result};

/// Limit on the number of realizations averaged by [`exact_trace_moment`].
pub const REALIZATION_LIMIT: u128 = 10_000_000;
/// Limit on walk pairs visited by the path-sum oracles.
pub const PAIR_LIMIT: u128 = 100_000_000;

/// The exponent choice used to turn the moment bound into a tail bound.
pub const PROOF_DELTA: f64 = 1.0 / 42.0;

/// One random entry: value `v` with probability `p` for each atom `(v, p)`.
/// Indices are 0-based; Hermitian ensembles store `i <= j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteEntry {
    pub i: usize,
    pub j: usize,
    pub atoms: Vec<(BigRational, BigRational)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteEnsemble {
    n: usize,
    hermitian: bool,
    scale2: BigRational,
    entries: Vec<FiniteEntry>,
    index: BTreeMap<(usize, usize), usize>,
}

/// Rational approximation of an `f64`: short decimals are recognised exactly
/// (`0.4 -> 2/5`, `3.0000000000000004 -> 3`), anything else is converted bit-exactly.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("{x} is not finite")));
    }
    if x.abs() < 1e12 {
        let r = (x * 1e6).round();
        if (r / 1e6 - x).abs() <= 1e-12 * x.abs().max(1.0) {
            return Ok(BigRational::new(BigInt::from(r as i64), BigInt::from(1_000_000)));
        }
    }
    BigRational::from_float(x).ok_or_else(|| Error::InvalidParameter(format!("cannot convert {x}")))
}

fn half() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(2))
}

impl FiniteEnsemble {
    pub fn new(n: usize, hermitian: bool, scale2: BigRational, entries: Vec<FiniteEntry>) -> Result<Self> {
        if !scale2.is_positive() {
            return Err(Error::InvalidParameter("scale2 must be positive".to_string()));
        }
        let mut index = BTreeMap::new();
        let mut stored = Vec::with_capacity(entries.len());
        for mut e in entries {
            if e.i >= n || e.j >= n {
                return Err(Error::IndexOutOfRange { row: e.i, col: e.j, n });
            }
            if hermitian && e.i > e.j {
                core::mem::swap(&mut e.i, &mut e.j);
            }
            if e.atoms.is_empty() || e.atoms.iter().any(|(_, p)| !p.is_positive()) {
                return Err(Error::InvalidParameter(format!("entry ({}, {}) needs positive atom probabilities", e.i, e.j)));
            }
            let total: BigRational = e.atoms.iter().map(|(_, p)| p.clone()).sum();
            if !total.is_one() {
                return Err(Error::InvalidParameter(format!("entry ({}, {}) probabilities sum to {total}", e.i, e.j)));
            }
            if index.insert((e.i, e.j), stored.len()).is_some() {
                return Err(Error::InvalidParameter(format!("entry ({}, {}) listed twice", e.i, e.j)));
            }
            stored.push(e);
        }
        Ok(Self { n, hermitian, scale2, entries: stored, index })
    }

    /// Symmetric signs `H_ij = ±1/q` on the given undirected edges, with `q2 = q^2`.
    pub fn rademacher(n: usize, edges: &[(usize, usize)], q2: BigRational) -> Result<Self> {
        if !q2.is_positive() {
            return Err(Error::InvalidParameter("q^2 must be positive".to_string()));
        }
        let mut seen = BTreeMap::new();
        for &(i, j) in edges {
            if i == j {
                return Err(Error::InvalidParameter(format!("loop at {i}")));
            }
            seen.insert((i.min(j), i.max(j)), ());
        }
        let atoms = vec![(BigRational::one(), half()), (-BigRational::one(), half())];
        let entries = seen.into_keys().map(|(i, j)| FiniteEntry { i, j, atoms: atoms.clone() }).collect();
        Self::new(n, true, q2.recip(), entries)
    }

    /// Centered Bernoulli entries `d^{-1/2} (A_ij - p_ij)` of a graph ensemble, or signs
    /// of a Rademacher ensemble. Probabilities and `d` are converted with
    /// [`rational_from_f64`].
    pub fn from_spec(spec: &EnsembleSpec) -> Result<Self> {
        if !spec.finite_support {
            return Err(Error::InvalidParameter("ensemble does not have finite support".to_string()));
        }
        let n = spec.n();
        if spec.kind == EnsembleKind::Rademacher {
            let support = spec.support.as_ref().ok_or_else(|| Error::InvalidParameter("missing support".to_string()))?;
            let edges: Vec<(usize, usize)> = support.iter().filter(|&(i, j, _)| i < j).map(|(i, j, _)| (i, j)).collect();
            let q = spec.params.q;
            return Self::rademacher(n, &edges, rational_from_f64(q * q)?);
        }
        let hermitian = spec.kind.is_hermitian();
        let mut entries = Vec::new();
        for i in 0..n {
            let start = if hermitian { i + 1 } else { 0 };
            for j in start..n {
                let p = spec.profile.p(i, j);
                if i == j || p <= 0.0 || p >= 1.0 {
                    continue;
                }
                let p = rational_from_f64(p)?;
                let one = BigRational::one();
                let atoms = vec![(&one - &p, p.clone()), (-p.clone(), &one - &p)];
                entries.push(FiniteEntry { i, j, atoms });
            }
        }
        let d = rational_from_f64(spec.params.d)?;
        if !d.is_positive() {
            return Err(Error::DegenerateProfile);
        }
        Self::new(n, hermitian, d.recip(), entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn scale2(&self) -> &BigRational {
        &self.scale2
    }

    pub fn entries(&self) -> &[FiniteEntry] {
        &self.entries
    }

    fn key(&self, a: usize, b: usize) -> (usize, usize) {
        if self.hermitian && a > b {
            (b, a)
        } else {
            (a, b)
        }
    }

    /// Index of the random entry sitting at `(a, b)`, if any.
    pub fn entry_at(&self, a: usize, b: usize) -> Option<usize> {
        self.index.get(&self.key(a, b)).copied()
    }

    pub fn realization_count(&self) -> u128 {
        self.entries.iter().fold(1u128, |acc, e| acc.saturating_mul(e.atoms.len() as u128))
    }

    /// `moments[e][m] = E v_e^m` for `m <= max_m`.
    fn moment_table(&self, max_m: usize) -> Vec<Vec<BigRational>> {
        self.entries
            .iter()
            .map(|e| {
                (0..=max_m)
                    .map(|m| e.atoms.iter().map(|(v, p)| num_traits::pow(v.clone(), m) * p).sum())
                    .collect()
            })
            .collect()
    }

    fn realizations(&self) -> Realizations<'_> {
        Realizations { ens: self, digits: vec![0; self.entries.len()], done: false }
    }
}

struct Realizations<'a> {
    ens: &'a FiniteEnsemble,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for Realizations<'_> {
    /// Dense row-major values `v` and the realization's probability.
    type Item = (Vec<BigRational>, BigRational);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let n = self.ens.n;
        let mut r = vec![BigRational::zero(); n * n];
        let mut prob = BigRational::one();
        for (e, &d) in self.ens.entries.iter().zip(&self.digits) {
            let (v, p) = &e.atoms[d];
            r[e.i * n + e.j] = v.clone();
            if self.ens.hermitian {
                r[e.j * n + e.i] = v.clone();
            }
            prob *= p;
        }
        let mut carry = true;
        for (e, d) in self.ens.entries.iter().zip(self.digits.iter_mut()) {
            *d += 1;
            if *d < e.atoms.len() {
                carry = false;
                break;
            }
            *d = 0;
        }
        self.done = carry;
        Some((r, prob))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentTarget {
    /// `tr B^l B^{*l}` for the nonbacktracking operator on all `n^2` ordered pairs.
    B,
    /// `tr H^l H^{*l}`.
    HDirected,
}

fn b_moment(r: &[BigRational], n: usize, ell: usize) -> BigRational {
    let mut total = BigRational::zero();
    for start in 0..n * n {
        let mut v = vec![BigRational::zero(); n * n];
        v[start] = BigRational::one();
        for _ in 0..ell {
            let mut w = vec![BigRational::zero(); n * n];
            for (ab, x) in v.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                let (a, b) = (ab / n, ab % n);
                for c in 0..n {
                    let h = &r[b * n + c];
                    if c != a && !h.is_zero() {
                        w[b * n + c] += x * h;
                    }
                }
            }
            v = w;
        }
        for x in v {
            total += &x * &x;
        }
    }
    total
}

fn h_moment(r: &[BigRational], n: usize, ell: usize) -> BigRational {
    let mut p: Vec<BigRational> = (0..n * n).map(|k| if k / n == k % n { BigRational::one() } else { BigRational::zero() }).collect();
    for _ in 0..ell {
        let mut q = vec![BigRational::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &p[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &r[k * n + j];
                    if !b.is_zero() {
                        q[i * n + j] += a * b;
                    }
                }
            }
        }
        p = q;
    }
    p.iter().map(|x| x * x).sum()
}

/// Average of the trace moment over every realization of the ensemble.
pub fn exact_trace_moment(ens: &FiniteEnsemble, ell: usize, target: MomentTarget) -> Result<BigRational> {
    let count = ens.realization_count();
    if count > REALIZATION_LIMIT {
        return Err(Error::SizeGuard { what: "realizations", size: count, limit: REALIZATION_LIMIT });
    }
    let n = ens.n;
    let mut acc = BigRational::zero();
    for (r, p) in ens.realizations() {
        let m = match target {
            MomentTarget::B => b_moment(&r, n, ell),
            MomentTarget::HDirected => h_moment(&r, n, ell),
        };
        acc += m * p;
    }
    Ok(acc * num_traits::pow(ens.scale2.clone(), ell))
}

/// A walk `x_0 .. x_l` along random entries, summarised by its entry multiset.
struct WalkRecord {
    second: usize,
    counts: Vec<(usize, usize)>,
}

fn entry_counts(ens: &FiniteEnsemble, xs: &[usize]) -> Option<Vec<(usize, usize)>> {
    let mut m: BTreeMap<usize, usize> = BTreeMap::new();
    for w in xs.windows(2) {
        *m.entry(ens.entry_at(w[0], w[1])?).or_insert(0) += 1;
    }
    Some(m.into_iter().collect())
}

fn walks<F: FnMut(&[usize])>(ens: &FiniteEnsemble, ell: usize, nonbacktracking: bool, mut f: F) {
    fn rec<F: FnMut(&[usize])>(ens: &FiniteEnsemble, ell: usize, nb: bool, xs: &mut Vec<usize>, f: &mut F) {
        if xs.len() == ell + 1 {
            f(xs);
            return;
        }
        let last = xs[xs.len() - 1];
        for c in 0..ens.n {
            if ens.entry_at(last, c).is_none() {
                continue;
            }
            if nb && xs.len() >= 2 && xs[xs.len() - 2] == c {
                continue;
            }
            xs.push(c);
            rec(ens, ell, nb, xs, f);
            xs.pop();
        }
    }
    for x0 in 0..ens.n {
        let mut xs = vec![x0];
        rec(ens, ell, nonbacktracking, &mut xs, &mut f);
    }
}

fn pair_product(table: &[Vec<BigRational>], a: &[(usize, usize)], b: &[(usize, usize)]) -> Option<BigRational> {
    let mut prod = BigRational::one();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (e, m) = match (a.get(i), b.get(j)) {
            (Some(&(ea, ma)), Some(&(eb, mb))) if ea == eb => {
                i += 1;
                j += 1;
                (ea, ma + mb)
            }
            (Some(&(ea, ma)), Some(&(eb, _))) if ea < eb => {
                i += 1;
                (ea, ma)
            }
            (Some(&(ea, ma)), None) => {
                i += 1;
                (ea, ma)
            }
            (_, Some(&(eb, mb))) => {
                j += 1;
                (eb, mb)
            }
            (None, None) => break,
        };
        let mom = &table[e][m];
        if mom.is_zero() {
            return None;
        }
        prod *= mom;
    }
    Some(prod)
}

fn bucket_pairs<K: Ord>(buckets: &BTreeMap<K, Vec<WalkRecord>>) -> Result<()> {
    let pairs: u128 = buckets.values().map(|b| (b.len() as u128).pow(2)).sum();
    if pairs > PAIR_LIMIT {
        return Err(Error::SizeGuard { what: "walk pairs", size: pairs, limit: PAIR_LIMIT });
    }
    Ok(())
}

fn walk_guard(n: usize, ell: usize) -> Result<()> {
    let size = (n as u128).checked_pow(ell as u32 + 1).unwrap_or(u128::MAX);
    if size > PAIR_LIMIT {
        return Err(Error::SizeGuard { what: "walks", size, limit: PAIR_LIMIT });
    }
    Ok(())
}

/// `E tr B^l B^{*l}` from the pair sum over nonbacktracking walks `xi^1, xi^2` that share
/// their first pair `(xi_{-1}, xi_0)` and last pair `(xi_{l-1}, xi_l)`. The unweighted
/// index `xi_{-1}` is summed out: it contributes `n - |{xi^1_1, xi^2_1}|` choices.
/// Requires a real ensemble (every value is rational).
pub fn path_sum_moment(ens: &FiniteEnsemble, ell: usize) -> Result<BigRational> {
    if ell == 0 {
        return Ok(BigRational::from_integer(BigInt::from(ens.n * ens.n)));
    }
    walk_guard(ens.n, ell)?;
    let table = ens.moment_table(2 * ell);
    let mut buckets: BTreeMap<(usize, usize, usize), Vec<WalkRecord>> = BTreeMap::new();
    walks(ens, ell, true, |xs| {
        if let Some(counts) = entry_counts(ens, xs) {
            buckets.entry((xs[0], xs[ell - 1], xs[ell])).or_default().push(WalkRecord { second: xs[1], counts });
        }
    });
    bucket_pairs(&buckets)?;
    let mut acc = BigRational::zero();
    for bucket in buckets.values() {
        for w1 in bucket {
            for w2 in bucket {
                if let Some(p) = pair_product(&table, &w1.counts, &w2.counts) {
                    let excluded = if w1.second == w2.second { 1 } else { 2 };
                    acc += p * BigInt::from(ens.n - excluded);
                }
            }
        }
    }
    Ok(acc * num_traits::pow(ens.scale2.clone(), ell))
}

/// `E tr H^l H^{*l}` from the pair sum over walks `xi^1, xi^2` sharing both endpoints.
pub fn h_path_sum_moment(ens: &FiniteEnsemble, ell: usize) -> Result<BigRational> {
    if ell == 0 {
        return Ok(BigRational::from_integer(BigInt::from(ens.n)));
    }
    walk_guard(ens.n, ell)?;
    let table = ens.moment_table(2 * ell);
    let mut buckets: BTreeMap<(usize, usize), Vec<WalkRecord>> = BTreeMap::new();
    walks(ens, ell, false, |xs| {
        if let Some(counts) = entry_counts(ens, xs) {
            buckets.entry((xs[0], xs[ell])).or_default().push(WalkRecord { second: 0, counts });
        }
    });
    bucket_pairs(&buckets)?;
    let mut acc = BigRational::zero();
    for bucket in buckets.values() {
        for w1 in bucket {
            for w2 in bucket {
                if let Some(p) = pair_product(&table, &w1.counts, &w2.counts) {
                    acc += p;
                }
            }
        }
    }
    Ok(acc * num_traits::pow(ens.scale2.clone(), ell))
}

fn path_moment(ens: &FiniteEnsemble, table: &[Vec<BigRational>], seqs: &[&[usize]], map: impl Fn(usize) -> usize) -> BigRational {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for s in seqs {
        for w in s.windows(2) {
            match ens.entry_at(map(w[0]), map(w[1])) {
                Some(e) => *counts.entry(e).or_insert(0) += 1,
                None => return BigRational::zero(),
            }
        }
    }
    let mut prod = BigRational::one();
    for (e, m) in counts {
        prod *= &table[e][m];
        if prod.is_zero() {
            break;
        }
    }
    prod
}

/// `sum_{xi} E prod_i H_{xi_{i-1} xi_i}` over the closed paths of the unrestricted
/// Hermitian set on `[n]`.
pub fn walk_sum_moment(ens: &FiniteEnsemble, ell: usize) -> Result<BigRational> {
    if !ens.hermitian {
        return Err(Error::InvalidParameter("walk sums need a Hermitian ensemble".to_string()));
    }
    let table = ens.moment_table(2 * ell);
    let mut acc = BigRational::zero();
    for_each_path(ens.n, ell, WalkMode::Hermitian, false, |p| {
        acc += path_moment(ens, &table, &p.sequences(), |v| v - 1);
    })?;
    Ok(acc * num_traits::pow(ens.scale2.clone(), ell))
}

/// `n` times the walk sum: the upper bound obtained by dropping the constraint on the
/// unweighted first index.
pub fn path_sum_bound(ens: &FiniteEnsemble, ell: usize) -> Result<BigRational> {
    Ok(walk_sum_moment(ens, ell)? * BigInt::from(ens.n))
}

/// `E sum_{xi ~ path} prod H` over all injective relabellings of a normal path into
/// `[n]`.
pub fn class_moment(ens: &FiniteEnsemble, path: &WalkPath) -> Result<BigRational> {
    let wants_hermitian = path.mode() == WalkMode::Hermitian;
    if wants_hermitian != ens.hermitian {
        return Err(Error::InvalidParameter("path mode and ensemble symmetry differ".to_string()));
    }
    if !path.is_normal() {
        return Err(Error::NotNormal);
    }
    let s = path.num_vertices();
    if s > ens.n {
        return Ok(BigRational::zero());
    }
    let size = (0..s).fold(1u128, |acc, i| acc.saturating_mul((ens.n - i) as u128));
    if size > REALIZATION_LIMIT {
        return Err(Error::SizeGuard { what: "relabellings", size, limit: REALIZATION_LIMIT });
    }
    let table = ens.moment_table(2 * path.ell());
    let seqs = path.sequences();
    let mut tau = vec![0usize; s];
    let mut used = vec![false; ens.n];
    let mut acc = BigRational::zero();
    fn rec(
        ens: &FiniteEnsemble,
        table: &[Vec<BigRational>],
        seqs: &[&[usize]],
        tau: &mut [usize],
        used: &mut [bool],
        t: usize,
        acc: &mut BigRational,
    ) {
        if t == tau.len() {
            *acc += path_moment(ens, table, seqs, |v| tau[v - 1]);
            return;
        }
        for x in 0..ens.n {
            if !used[x] {
                used[x] = true;
                tau[t] = x;
                rec(ens, table, seqs, tau, used, t + 1, acc);
                used[x] = false;
            }
        }
    }
    rec(ens, &table, &seqs, &mut tau, &mut used, 0, &mut acc);
    Ok(acc * num_traits::pow(ens.scale2.clone(), path.ell()))
}

/// `n^{1-g} kappa^g q^{2|E| - 2l}` for a class whose walk graph has genus `g` and `|E|`
/// edges.
pub fn class_bound(n: usize, kappa: f64, q: f64, genus: usize, edges: usize, ell: usize) -> f64 {
    let n = n as f64;
    n.powi(1 - genus as i32) * kappa.powi(genus as i32) * q.powi(2 * edges as i32 - 2 * ell as i32)
}

/// Fitted constant of the trace-moment envelope and the walk-length hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    /// `n^2 l^8 q^2` for `B`, `n l^8 q^2` for `H`.
    pub normalizer: f64,
    pub c0_fit: f64,
    /// `min{delta q log n, n^{1/6 - delta} / (q kappa^{1/6})}`; zero if `delta` is
    /// outside `(0, 1/6)`.
    pub hypothesis_min: f64,
    /// Smallest `c0` for which `l` satisfies the hypothesis.
    pub c0_required: f64,
    pub ell: usize,
}

impl EnvelopeReport {
    pub fn admissible(&self, c0: f64) -> bool {
        self.hypothesis_min > 0.0 && self.ell as f64 <= c0 * self.hypothesis_min
    }
}

pub fn moment_envelope(n: usize, ell: usize, q: f64, kappa: f64, delta: f64, measured: f64, target: MomentTarget) -> EnvelopeReport {
    let nf = n as f64;
    let lf = ell as f64;
    let power = match target {
        MomentTarget::B => 2,
        MomentTarget::HDirected => 1,
    };
    let normalizer = nf.powi(power) * lf.powi(8) * q * q;
    let c0_fit = if measured == 0.0 { 0.0 } else { measured / normalizer };
    let hypothesis_min = if delta > 0.0 && delta < 1.0 / 6.0 && n >= 2 {
        (delta * q * nf.ln()).min(nf.powf(1.0 / 6.0 - delta) / (q * kappa.powf(1.0 / 6.0)))
    } else {
        0.0
    };
    let c0_required = if hypothesis_min > 0.0 { lf / hypothesis_min } else { f64::INFINITY };
    EnvelopeReport { normalizer, c0_fit, hypothesis_min, c0_required, ell }
}

/// `ceil((c / 2) q log n)`, the walk length used for the tail bound.
pub fn proof_ell(c: f64, q: f64, n: usize) -> usize {
    (0.5 * c * q * (n as f64).ln()).ceil().max(1.0) as usize
}

/// `h(t) = (1 + t) log(1 + t) - t`.
pub fn bennett_h(t: f64) -> f64 {
    (1.0 + t) * t.ln_1p() - t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::enumerate_normal;
    use num_traits::ToPrimitive;

    fn int(k: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(k))
    }

    fn triangle() -> Vec<(usize, usize)> {
        vec![(0, 1), (1, 2), (0, 2)]
    }

    fn k4() -> Vec<(usize, usize)> {
        vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    }

    #[test]
    fn rationals_from_floats() {
        assert_eq!(rational_from_f64(0.4).unwrap(), BigRational::new(BigInt::from(2), BigInt::from(5)));
        assert_eq!(rational_from_f64(2f64.sqrt().powi(2)).unwrap(), int(2));
        assert!(rational_from_f64(f64::NAN).is_err());
    }

    #[test]
    fn triangle_first_moment_is_six() {
        let ens = FiniteEnsemble::rademacher(3, &triangle(), int(2)).unwrap();
        assert_eq!(exact_trace_moment(&ens, 1, MomentTarget::B).unwrap(), int(6));
        assert_eq!(path_sum_moment(&ens, 1).unwrap(), int(6));
    }

    #[test]
    fn oracles_agree_on_small_supports() {
        let path4 = vec![(0, 1), (1, 2), (2, 3)];
        for (n, edges, q2) in [(3, triangle(), 2), (4, k4(), 3), (4, path4, 2)] {
            let ens = FiniteEnsemble::rademacher(n, &edges, int(q2)).unwrap();
            for ell in 1..=3 {
                let exact = exact_trace_moment(&ens, ell, MomentTarget::B).unwrap();
                assert_eq!(path_sum_moment(&ens, ell).unwrap(), exact, "n={n} l={ell}");
                let h = exact_trace_moment(&ens, ell, MomentTarget::HDirected).unwrap();
                assert_eq!(h_path_sum_moment(&ens, ell).unwrap(), h, "n={n} l={ell}");
            }
        }
    }

    #[test]
    fn directed_bernoulli_oracles_agree() {
        let spec = EnsembleSpec::directed_er(3, 1.2).unwrap();
        let ens = FiniteEnsemble::from_spec(&spec).unwrap();
        assert!(!ens.is_hermitian());
        for ell in 1..=2 {
            let exact = exact_trace_moment(&ens, ell, MomentTarget::HDirected).unwrap();
            assert_eq!(h_path_sum_moment(&ens, ell).unwrap(), exact);
            let b = exact_trace_moment(&ens, ell, MomentTarget::B).unwrap();
            assert_eq!(path_sum_moment(&ens, ell).unwrap(), b);
        }
    }

    #[test]
    fn hermitian_bernoulli_oracles_agree() {
        let spec = EnsembleSpec::homogeneous_er(4, 1.5).unwrap();
        let ens = FiniteEnsemble::from_spec(&spec).unwrap();
        for ell in 1..=2 {
            let exact = exact_trace_moment(&ens, ell, MomentTarget::B).unwrap();
            assert_eq!(path_sum_moment(&ens, ell).unwrap(), exact);
        }
    }

    #[test]
    fn degenerate_supports() {
        let single = FiniteEnsemble::rademacher(2, &[(0, 1)], int(1)).unwrap();
        for ell in 1..=4 {
            // B on a single edge pair: every step would have to return along the edge.
            let b = exact_trace_moment(&single, ell, MomentTarget::B).unwrap();
            let expected = if ell == 1 { int(2) } else { int(0) };
            assert_eq!(b, expected, "l={ell}");
        }
        let zero = FiniteEnsemble::new(3, true, int(1), vec![]).unwrap();
        assert!(path_sum_moment(&zero, 2).unwrap().is_zero());
        assert!(exact_trace_moment(&zero, 2, MomentTarget::B).unwrap().is_zero());
    }

    #[test]
    fn class_sums_add_up_to_the_walk_sum() {
        let ens = FiniteEnsemble::rademacher(4, &k4(), int(3)).unwrap();
        for ell in 1..=3 {
            let walk = walk_sum_moment(&ens, ell).unwrap();
            let classes: BigRational = enumerate_normal(4, ell, WalkMode::Hermitian)
                .unwrap()
                .iter()
                .map(|p| class_moment(&ens, p).unwrap())
                .sum();
            assert_eq!(walk, classes, "l={ell}");
        }
    }

    #[test]
    fn class_bound_dominates_class_sum() {
        let ens = FiniteEnsemble::rademacher(4, &k4(), int(3)).unwrap();
        let (kappa, q) = (4.0 / 3.0, 3f64.sqrt());
        for ell in 1..=3 {
            for p in enumerate_normal(4, ell, WalkMode::Hermitian).unwrap() {
                let g = crate::walks::build_walk_graph(&p);
                let bound = class_bound(4, kappa, q, g.genus().unwrap(), g.num_edges(), ell);
                let val = class_moment(&ens, &p).unwrap().to_f64().unwrap();
                assert!(val <= bound * (1.0 + 1e-12), "{p:?}: {val} > {bound}");
            }
        }
    }

    #[test]
    fn envelope_values() {
        let r = moment_envelope(100, 3, 2.0, 1.0, 0.1, 0.0, MomentTarget::B);
        assert_eq!(r.c0_fit, 0.0);
        let r = moment_envelope(10, 1, 1.0, 1.0, 0.1, 200.0, MomentTarget::B);
        assert!((r.c0_fit - 2.0).abs() < 1e-12);
        let r = moment_envelope(10, 1, 1.0, 1.0, 0.1, 20.0, MomentTarget::HDirected);
        assert!((r.c0_fit - 2.0).abs() < 1e-12);
        assert!(!moment_envelope(10, 1, 1.0, 1.0, 0.2, 1.0, MomentTarget::B).admissible(1e9));
    }

    #[test]
    fn proof_length_choice_is_admissible_for_small_c() {
        // With delta = 1/42 and l = ceil((c/2) q log n), the first term of the hypothesis
        // needs c0 of order 21 c; large n makes the second term irrelevant.
        let (n, q) = (1usize << 40, 3.0);
        let c = 0.01;
        let ell = proof_ell(c, q, n);
        let r = moment_envelope(n, ell, q, 1.0, PROOF_DELTA, 1.0, MomentTarget::B);
        assert!(r.admissible(1.0));
        assert!(r.c0_required <= 21.0 * c + 1.0 / (PROOF_DELTA * q * (n as f64).ln()));
    }

    #[test]
    fn bennett_function() {
        assert_eq!(bennett_h(0.0), 0.0);
        assert!((bennett_h(1.0) - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((bennett_h(1.0) - 0.38629).abs() < 1e-5);
    }

    #[test]
    fn guards() {
        let ens = FiniteEnsemble::rademacher(4, &k4(), int(3)).unwrap();
        assert_eq!(ens.realization_count(), 64);
        let edges: Vec<(usize, usize)> = (0..30).map(|i| (i, i + 1)).collect();
        let big = FiniteEnsemble::rademacher(31, &edges, int(2)).unwrap();
        assert!(matches!(exact_trace_moment(&big, 1, MomentTarget::B), Err(Error::SizeGuard { .. })));
    }
}
