//! Walk combinatorics behind the trace-moment bounds: constrained path sets, walk
//! graphs, normal forms, the degree-two contraction `(U, zeta, k, gamma)` and exact
//! moment oracles on finite-support ensembles.
//!
//! Vertex labels are 1-based. A Hermitian-mode path is a closed sequence
//! `xi_0 .. xi_{2l}` with a forced turn at `xi_l`; a directed-pair path is two
//! sequences `xi^1, xi^2` of length `l + 1` sharing both endpoints.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

mod graph;
mod moments;
mod reduce;
mod sample;

pub use graph::{build_walk_graph, genus, MultiGraph};
pub use moments::{
    bennett_h, class_bound, class_moment, exact_trace_moment, h_path_sum_moment, moment_envelope,
    path_sum_bound, path_sum_moment, proof_ell, rational_from_f64, walk_sum_moment, EnvelopeReport,
    FiniteEnsemble, FiniteEntry, MomentTarget, PROOF_DELTA,
};
pub use reduce::{
    expand, format_labels, format_zeta, plain_key, reduce_path, verify_reduction, PropertyCheck,
    ReducedTriple, ReductionReport, ZetaPath,
};
pub use num_rational::BigRational;
pub use sample::PathSampler;

/// Upper limit on the size of an exhaustive search space.
pub const ENUMERATION_LIMIT: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WalkMode {
    Hermitian,
    DirectedPair,
}

impl WalkMode {
    pub fn name(self) -> &'static str {
        match self {
            WalkMode::Hermitian => "hermitian",
            WalkMode::DirectedPair => "directed-pair",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hermitian" => Ok(WalkMode::Hermitian),
            "directed-pair" | "directed" => Ok(WalkMode::DirectedPair),
            other => Err(Error::Parse(format!("unknown walk mode '{other}'"))),
        }
    }
}

/// A path of either mode. Construction checks membership in the unrestricted set
/// (closedness, the turn at `xi_l` and the nonbacktracking condition in Hermitian mode;
/// shared endpoints in directed-pair mode).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WalkPath {
    Hermitian { xi: Vec<usize>, ell: usize },
    DirectedPair { first: Vec<usize>, second: Vec<usize>, ell: usize },
}

impl WalkPath {
    pub fn hermitian(xi: Vec<usize>) -> Result<Self> {
        if xi.len().is_multiple_of(2) {
            return Err(Error::InvalidWalk(format!("a closed path has odd length, got {}", xi.len())));
        }
        if xi.contains(&0) {
            return Err(Error::InvalidWalk("vertex labels are 1-based".to_string()));
        }
        let ell = xi.len() / 2;
        if xi[0] != xi[2 * ell] {
            return Err(Error::InvalidWalk("path is not closed".to_string()));
        }
        if ell >= 1 && xi[ell - 1] != xi[ell + 1] {
            return Err(Error::InvalidWalk(format!("no turn at position {ell}")));
        }
        for i in 1..2 * ell {
            if i != ell && xi[i - 1] == xi[i + 1] {
                return Err(Error::InvalidWalk(format!("backtrack at position {i}")));
            }
        }
        Ok(WalkPath::Hermitian { xi, ell })
    }

    pub fn directed_pair(first: Vec<usize>, second: Vec<usize>) -> Result<Self> {
        if first.is_empty() || first.len() != second.len() {
            return Err(Error::InvalidWalk(format!(
                "paths must have equal positive length, got {} and {}",
                first.len(),
                second.len()
            )));
        }
        if first.contains(&0) || second.contains(&0) {
            return Err(Error::InvalidWalk("vertex labels are 1-based".to_string()));
        }
        let ell = first.len() - 1;
        if first[0] != second[0] || first[ell] != second[ell] {
            return Err(Error::InvalidWalk("paths do not share endpoints".to_string()));
        }
        Ok(WalkPath::DirectedPair { first, second, ell })
    }

    pub fn mode(&self) -> WalkMode {
        match self {
            WalkPath::Hermitian { .. } => WalkMode::Hermitian,
            WalkPath::DirectedPair { .. } => WalkMode::DirectedPair,
        }
    }

    pub fn ell(&self) -> usize {
        match self {
            WalkPath::Hermitian { ell, .. } | WalkPath::DirectedPair { ell, .. } => *ell,
        }
    }

    /// The vertex sequences (one in Hermitian mode, two in directed-pair mode).
    pub fn sequences(&self) -> Vec<&[usize]> {
        match self {
            WalkPath::Hermitian { xi, .. } => vec![xi.as_slice()],
            WalkPath::DirectedPair { first, second, .. } => vec![first.as_slice(), second.as_slice()],
        }
    }

    /// `xi_0`.
    pub fn start(&self) -> usize {
        self.sequences()[0][0]
    }

    /// `xi_l`, the turning vertex (Hermitian) or the common endpoint (directed).
    pub fn middle(&self) -> usize {
        self.sequences()[0][self.ell()]
    }

    pub fn num_vertices(&self) -> usize {
        let mut v: Vec<usize> = self.sequences().iter().flat_map(|s| s.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    }

    pub fn max_label(&self) -> usize {
        self.sequences().iter().flat_map(|s| s.iter().copied()).max().unwrap_or(0)
    }

    /// Crossing counts per edge: unordered pairs `(min, max)` in Hermitian mode, ordered
    /// pairs summed over both paths in directed-pair mode.
    pub fn crossings(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        let directed = self.mode() == WalkMode::DirectedPair;
        for s in self.sequences() {
            for w in s.windows(2) {
                *m.entry(edge_key(w[0], w[1], directed)).or_insert(0) += 1;
            }
        }
        m
    }

    /// Membership in the restricted set: no edge is crossed exactly once.
    pub fn in_c(&self) -> bool {
        self.crossings().values().all(|&c| c != 1)
    }

    /// New vertices appear as `1, 2, 3, ..` in order of first visit (first path first).
    pub fn is_normal(&self) -> bool {
        let mut next = 1;
        for s in self.sequences() {
            for &v in s {
                if v == next {
                    next += 1;
                } else if v > next {
                    return false;
                }
            }
        }
        true
    }

    /// The unique normal representative of the relabelling class.
    pub fn normalize(&self) -> WalkPath {
        let mut map = BTreeMap::new();
        let mut relabel = |s: &[usize]| -> Vec<usize> {
            s.iter()
                .map(|&v| {
                    let next = map.len() + 1;
                    *map.entry(v).or_insert(next)
                })
                .collect()
        };
        match self {
            WalkPath::Hermitian { xi, ell } => WalkPath::Hermitian { xi: relabel(xi), ell: *ell },
            WalkPath::DirectedPair { first, second, ell } => {
                let a = relabel(first);
                let b = relabel(second);
                WalkPath::DirectedPair { first: a, second: b, ell: *ell }
            }
        }
    }

    /// Applies a vertex relabelling `v -> perm[v - 1]` (labels stay 1-based).
    pub fn relabel(&self, perm: &[usize]) -> Result<WalkPath> {
        let map = |s: &[usize]| -> Result<Vec<usize>> {
            s.iter()
                .map(|&v| {
                    perm.get(v - 1).copied().ok_or_else(|| {
                        Error::InvalidWalk(format!("relabelling does not cover vertex {v}"))
                    })
                })
                .collect()
        };
        match self {
            WalkPath::Hermitian { xi, .. } => WalkPath::hermitian(map(xi)?),
            WalkPath::DirectedPair { first, second, .. } => WalkPath::directed_pair(map(first)?, map(second)?),
        }
    }
}

pub(crate) fn edge_key(a: usize, b: usize, directed: bool) -> (usize, usize) {
    if directed || a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Normalizes a path (free function form).
pub fn normalize_path(path: &WalkPath) -> WalkPath {
    path.normalize()
}

/// Both path sets for a given `(n, l, mode)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSets {
    pub c_tilde: Vec<WalkPath>,
    pub c: Vec<WalkPath>,
}

fn search_space(n: usize, ell: usize, mode: WalkMode) -> u128 {
    let exp = match mode {
        WalkMode::Hermitian => 2 * ell + 1,
        WalkMode::DirectedPair => 2 * ell,
    };
    (n as u128).checked_pow(exp as u32).unwrap_or(u128::MAX)
}

fn check_guard(n: usize, ell: usize, mode: WalkMode) -> Result<()> {
    let size = search_space(n, ell, mode);
    if size > ENUMERATION_LIMIT {
        return Err(Error::SizeGuard { what: "path enumeration", size, limit: ENUMERATION_LIMIT });
    }
    Ok(())
}

/// Visits every path of the unrestricted set over `[n]`. With `normal_only`, only
/// normal paths are generated (the search never leaves normal form).
pub fn for_each_path<F: FnMut(&WalkPath)>(n: usize, ell: usize, mode: WalkMode, normal_only: bool, mut f: F) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".to_string()));
    }
    if mode == WalkMode::DirectedPair && ell == 0 {
        return Err(Error::InvalidParameter("directed pairs need l >= 1".to_string()));
    }
    if !normal_only {
        check_guard(n, ell, mode)?;
    }
    match mode {
        WalkMode::Hermitian => {
            let mut xi = vec![0usize; 2 * ell + 1];
            let firsts: Vec<usize> = if normal_only { vec![1] } else { (1..=n).collect() };
            for x0 in firsts {
                xi[0] = x0;
                hermitian_dfs(n, ell, normal_only, &mut xi, 1, x0, &mut f);
            }
        }
        WalkMode::DirectedPair => {
            let mut first = vec![0usize; ell + 1];
            let mut second = vec![0usize; ell + 1];
            let firsts: Vec<usize> = if normal_only { vec![1] } else { (1..=n).collect() };
            for x0 in firsts {
                first[0] = x0;
                directed_first(n, ell, normal_only, &mut first, &mut second, 1, x0, &mut f);
            }
        }
    }
    Ok(())
}

fn candidates(n: usize, normal_only: bool, max_seen: usize) -> core::ops::RangeInclusive<usize> {
    if normal_only {
        1..=(max_seen + 1).min(n)
    } else {
        1..=n
    }
}

fn hermitian_dfs<F: FnMut(&WalkPath)>(
    n: usize,
    ell: usize,
    normal_only: bool,
    xi: &mut [usize],
    pos: usize,
    max_seen: usize,
    f: &mut F,
) {
    let last = 2 * ell;
    if pos > last {
        f(&WalkPath::Hermitian { xi: xi.to_vec(), ell });
        return;
    }
    if pos == last {
        // Closing step: forced to xi_0, nonbacktracking at `last - 1` unless that is the turn.
        let v = xi[0];
        if last - 1 != ell && xi[last - 2] == v {
            return;
        }
        xi[pos] = v;
        hermitian_dfs(n, ell, normal_only, xi, pos + 1, max_seen, f);
        return;
    }
    if pos == ell + 1 {
        xi[pos] = xi[ell - 1];
        hermitian_dfs(n, ell, normal_only, xi, pos + 1, max_seen, f);
        return;
    }
    for v in candidates(n, normal_only, max_seen) {
        if pos >= 2 && pos - 1 != ell && xi[pos - 2] == v {
            continue;
        }
        xi[pos] = v;
        hermitian_dfs(n, ell, normal_only, xi, pos + 1, max_seen.max(v), f);
    }
}

#[allow(clippy::too_many_arguments)]
fn directed_first<F: FnMut(&WalkPath)>(
    n: usize,
    ell: usize,
    normal_only: bool,
    first: &mut [usize],
    second: &mut [usize],
    pos: usize,
    max_seen: usize,
    f: &mut F,
) {
    if pos > ell {
        second[0] = first[0];
        directed_second(n, ell, normal_only, first, second, 1, max_seen, f);
        return;
    }
    for v in candidates(n, normal_only, max_seen) {
        first[pos] = v;
        directed_first(n, ell, normal_only, first, second, pos + 1, max_seen.max(v), f);
    }
}

#[allow(clippy::too_many_arguments)]
fn directed_second<F: FnMut(&WalkPath)>(
    n: usize,
    ell: usize,
    normal_only: bool,
    first: &[usize],
    second: &mut [usize],
    pos: usize,
    max_seen: usize,
    f: &mut F,
) {
    if pos == ell {
        second[ell] = first[ell];
        f(&WalkPath::DirectedPair { first: first.to_vec(), second: second.to_vec(), ell });
        return;
    }
    for v in candidates(n, normal_only, max_seen) {
        second[pos] = v;
        directed_second(n, ell, normal_only, first, second, pos + 1, max_seen.max(v), f);
    }
}

/// Exhaustive listing of the unrestricted set and of the restricted set `C`.
pub fn enumerate_paths(n: usize, ell: usize, mode: WalkMode) -> Result<PathSets> {
    let mut c_tilde = Vec::new();
    let mut c = Vec::new();
    for_each_path(n, ell, mode, false, |p| {
        if p.in_c() {
            c.push(p.clone());
        }
        c_tilde.push(p.clone());
    })?;
    Ok(PathSets { c_tilde, c })
}

/// The normal representatives of `C` whose labels fit in `[n]`, generated directly in
/// normal form.
pub fn enumerate_normal(n: usize, ell: usize, mode: WalkMode) -> Result<Vec<WalkPath>> {
    let mut out = Vec::new();
    for_each_path(n, ell, mode, true, |p| {
        if p.in_c() {
            out.push(p.clone());
        }
    })?;
    Ok(out)
}

/// Reads a path fixture: whitespace-separated integers, one path per non-comment line.
/// One line gives a Hermitian path, two lines a directed pair.
pub fn parse_walk(text: &str) -> Result<WalkPath> {
    let mut lines = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let seq = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("line {}: '{t}': {e}", no + 1))))
            .collect::<Result<Vec<_>>>()?;
        lines.push(seq);
    }
    match lines.len() {
        1 => WalkPath::hermitian(lines.pop().unwrap_or_default()),
        2 => {
            let second = lines.pop().unwrap_or_default();
            let first = lines.pop().unwrap_or_default();
            WalkPath::directed_pair(first, second)
        }
        k => Err(Error::Parse(format!("expected one or two paths, found {k}"))),
    }
}

/// Writes a path in the fixture format.
pub fn write_walk(path: &WalkPath) -> String {
    let mut s = String::new();
    for seq in path.sequences() {
        let line: Vec<String> = seq.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_c(n: usize, ell: usize) -> usize {
        // Filters all of [n]^{2l+1} by the three constraints, then the crossing rule.
        let len = 2 * ell + 1;
        let total = n.pow(len as u32);
        let mut count = 0;
        for code in 0..total {
            let mut c = code;
            let xi: Vec<usize> = (0..len)
                .map(|_| {
                    let v = c % n + 1;
                    c /= n;
                    v
                })
                .collect();
            if xi[0] != xi[2 * ell] || (ell >= 1 && xi[ell - 1] != xi[ell + 1]) {
                continue;
            }
            if (1..2 * ell).any(|i| i != ell && xi[i - 1] == xi[i + 1]) {
                continue;
            }
            let mut m: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            for w in xi.windows(2) {
                *m.entry((w[0].min(w[1]), w[0].max(w[1]))).or_insert(0) += 1;
            }
            if m.values().all(|&c| c != 1) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn single_vertex_sets() {
        let s = enumerate_paths(1, 0, WalkMode::Hermitian).unwrap();
        assert_eq!((s.c_tilde.len(), s.c.len()), (1, 1));
        let s = enumerate_paths(1, 1, WalkMode::Hermitian).unwrap();
        assert_eq!((s.c_tilde.len(), s.c.len()), (1, 1));
    }

    #[test]
    fn two_vertices_length_one() {
        // xi = (a, b, a) for any a, b.
        let s = enumerate_paths(2, 1, WalkMode::Hermitian).unwrap();
        assert_eq!(s.c_tilde.len(), 4);
        assert_eq!(s.c.len(), 4);
    }

    #[test]
    fn matches_brute_force_filter() {
        for (n, ell) in [(3, 2), (3, 3), (4, 2), (2, 3)] {
            let s = enumerate_paths(n, ell, WalkMode::Hermitian).unwrap();
            assert_eq!(s.c.len(), brute_force_c(n, ell), "n={n} l={ell}");
            assert!(s.c.iter().all(|p| s.c_tilde.contains(p)));
        }
    }

    #[test]
    fn normal_generation_matches_normalized_classes() {
        for mode in [WalkMode::Hermitian, WalkMode::DirectedPair] {
            for (n, ell) in [(3, 2), (4, 3), (3, 1)] {
                let all = enumerate_paths(n, ell, mode).unwrap();
                let mut classes: Vec<WalkPath> = all.c.iter().map(|p| p.normalize()).collect();
                classes.sort();
                classes.dedup();
                let mut direct = enumerate_normal(n, ell, mode).unwrap();
                direct.sort();
                assert_eq!(classes, direct, "{mode:?} n={n} l={ell}");
            }
        }
    }

    #[test]
    fn guard_rejects_large_searches() {
        assert!(matches!(enumerate_paths(10, 4, WalkMode::Hermitian), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn normalization_is_idempotent_and_class_constant() {
        let p = WalkPath::hermitian(vec![3, 5, 2, 5, 3]).unwrap();
        let q = p.normalize();
        assert_eq!(q, WalkPath::hermitian(vec![1, 2, 3, 2, 1]).unwrap());
        assert_eq!(q.normalize(), q);
        assert!(q.is_normal() && !p.is_normal());
        let r = p.relabel(&[9, 8, 7, 6, 5]).unwrap();
        assert_eq!(r.normalize(), q);
    }

    #[test]
    fn constructor_rejects_invalid_paths() {
        assert!(WalkPath::hermitian(vec![1, 2, 1, 2]).is_err());
        assert!(WalkPath::hermitian(vec![1, 2, 3, 2, 3, 2, 1]).is_err());
        assert!(WalkPath::hermitian(vec![1, 2, 1, 2, 1]).is_err());
        assert!(WalkPath::directed_pair(vec![1, 2], vec![1, 3]).is_err());
    }

    #[test]
    fn fixture_round_trip() {
        let p = WalkPath::directed_pair(vec![1, 2, 3], vec![1, 3, 3]).unwrap();
        assert_eq!(parse_walk(&write_walk(&p)).unwrap(), p);
        assert!(parse_walk("# nothing\n").is_err());
    }
}
