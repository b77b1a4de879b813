//! Contraction of degree-two vertices: `xi -> (U, zeta, k, gamma)`, its inverse and the
//! structural property checks.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{build_walk_graph, genus, MultiGraph};
use super::{edge_key, WalkMode, WalkPath};
use crate::{Error, Result};

/// A path in `U`: `vertices[i]` and `vertices[i + 1]` are joined by edge `edges[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZetaPath {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl ZetaPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// The contracted multigraph `U` on `1..=s`, the induced path(s), edge weights and the
/// image `gamma` of `xi_l`. Edges are numbered by first traversal.
///
/// `loop_reversed[p][i]` records whether step `i` of path `p` runs around a loop edge
/// against the orientation of that loop's first traversal. A multigraph path does not
/// carry this bit, and without it the map is not injective (see [`plain_key`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReducedTriple {
    pub mode: WalkMode,
    pub u: MultiGraph,
    pub zeta: Vec<ZetaPath>,
    pub k: Vec<usize>,
    pub gamma: usize,
    pub loop_reversed: Vec<Vec<bool>>,
}

impl ReducedTriple {
    /// Crossing counts `m_e(zeta)` summed over all paths.
    pub fn crossings(&self) -> Vec<usize> {
        let mut m = vec![0; self.k.len()];
        for z in &self.zeta {
            for &e in &z.edges {
                m[e] += 1;
            }
        }
        m
    }

    pub fn is_loop(&self, e: usize) -> bool {
        let (a, b) = self.u.edges()[e];
        a == b
    }
}

struct Chain {
    vertices: Vec<usize>,
}

impl Chain {
    fn start(&self) -> usize {
        self.vertices[0]
    }

    fn end(&self) -> usize {
        self.vertices[self.vertices.len() - 1]
    }

    fn weight(&self) -> usize {
        self.vertices.len() - 1
    }
}

fn neighbours(g: &MultiGraph) -> BTreeMap<usize, Vec<usize>> {
    let mut nb: BTreeMap<usize, Vec<usize>> = g.vertices().iter().map(|&v| (v, Vec::new())).collect();
    for &(a, b) in g.edges() {
        nb.entry(a).or_default().push(b);
        if !g.is_directed() && a != b {
            nb.entry(b).or_default().push(a);
        }
    }
    for l in nb.values_mut() {
        l.sort_unstable();
    }
    nb
}

fn chains(g: &MultiGraph, interior: &BTreeSet<usize>) -> Result<(Vec<Chain>, BTreeMap<(usize, usize), usize>)> {
    let directed = g.is_directed();
    let nb = neighbours(g);
    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut out = Vec::new();
    for &u in g.vertices() {
        if interior.contains(&u) {
            continue;
        }
        for &v in &nb[&u] {
            let key = edge_key(u, v, directed);
            if owner.contains_key(&key) {
                continue;
            }
            let id = out.len();
            owner.insert(key, id);
            let mut seq = vec![u, v];
            let (mut prev, mut cur) = (u, v);
            while interior.contains(&cur) {
                let next = match nb[&cur].as_slice() {
                    [x] if directed => *x,
                    [x, y] if !directed && *x != *y => {
                        if *x == prev {
                            *y
                        } else {
                            *x
                        }
                    }
                    _ => return Err(Error::InvalidWalk(format!("vertex {cur} has an unexpected neighbourhood"))),
                };
                owner.insert(edge_key(cur, next, directed), id);
                seq.push(next);
                prev = cur;
                cur = next;
            }
            out.push(Chain { vertices: seq });
        }
    }
    if owner.len() != g.num_edges() {
        return Err(Error::InvalidWalk("some edges are not reachable from a kept vertex".to_string()));
    }
    Ok((out, owner))
}

/// Contracts every degree-two vertex other than `xi_0` and `xi_l` (in directed-pair
/// mode: every vertex with in- and outdegree one) and relabels the remaining vertices
/// increasingly. The path must lie in `C` and be normal.
pub fn reduce_path(path: &WalkPath) -> Result<ReducedTriple> {
    if !path.in_c() {
        return Err(Error::InvalidWalk("some edge is crossed exactly once".to_string()));
    }
    if !path.is_normal() {
        return Err(Error::NotNormal);
    }
    let directed = path.mode() == WalkMode::DirectedPair;
    let g = build_walk_graph(path);
    let exceptional = [path.start(), path.middle()];
    let interior: BTreeSet<usize> = g
        .vertices()
        .iter()
        .copied()
        .filter(|&v| !exceptional.contains(&v) && g.degree(v) == 2)
        .collect();
    if directed && interior.iter().any(|&v| g.in_degree(v) != 1) {
        return Err(Error::InvalidWalk("a degree-two vertex is not a pass-through".to_string()));
    }
    let (chains, owner) = chains(&g, &interior)?;

    let kept: Vec<usize> = g.vertices().iter().copied().filter(|v| !interior.contains(v)).collect();
    let tau = |v: usize| kept.binary_search(&v).map(|i| i + 1).unwrap_or(0);

    let mut edge_id: Vec<Option<usize>> = vec![None; chains.len()];
    let mut first_reversed = vec![false; chains.len()];
    let mut order = Vec::new();
    let mut zeta = Vec::new();
    let mut loop_reversed = Vec::new();
    for s in path.sequences() {
        let mut vertices = vec![tau(s[0])];
        let mut edges = Vec::new();
        let mut flags = Vec::new();
        let mut pos = 0;
        while pos + 1 < s.len() {
            let c = owner[&edge_key(s[pos], s[pos + 1], directed)];
            let ch = &chains[c];
            let k = ch.weight();
            let seg = s.get(pos..=pos + k).ok_or_else(|| Error::InvalidWalk("path ends inside a contracted chain".to_string()))?;
            let forward = seg == ch.vertices.as_slice();
            let backward = !directed && seg.iter().eq(ch.vertices.iter().rev());
            if !forward && !backward {
                return Err(Error::InvalidWalk(format!("path turns inside a contracted chain at position {pos}")));
            }
            let reversed = !forward;
            let id = match edge_id[c] {
                Some(id) => id,
                None => {
                    let id = order.len();
                    edge_id[c] = Some(id);
                    first_reversed[c] = reversed;
                    order.push(c);
                    id
                }
            };
            let is_loop = ch.start() == ch.end() && k > 1;
            flags.push(is_loop && reversed != first_reversed[c]);
            edges.push(id);
            vertices.push(tau(s[pos + k]));
            pos += k;
        }
        zeta.push(ZetaPath { vertices, edges });
        loop_reversed.push(flags);
    }

    let u_edges: Vec<(usize, usize)> = order.iter().map(|&c| (tau(chains[c].start()), tau(chains[c].end()))).collect();
    let k: Vec<usize> = order.iter().map(|&c| chains[c].weight()).collect();
    let u = MultiGraph::new(directed, (1..=kept.len()).collect(), u_edges)?;
    Ok(ReducedTriple { mode: path.mode(), u, zeta, k, gamma: tau(path.middle()), loop_reversed })
}

/// Rebuilds the normal path from a reduced triple: interior vertices of a contracted
/// edge receive fresh labels on its first traversal.
pub fn expand(t: &ReducedTriple) -> Result<WalkPath> {
    let s = t.u.num_vertices();
    let mut label: Vec<Option<usize>> = vec![None; s + 1];
    let mut interior: Vec<Option<(usize, Vec<usize>)>> = vec![None; t.k.len()];
    let mut next = 1;
    let mut fresh = |slot: &mut Option<usize>| -> usize {
        *slot.get_or_insert_with(|| {
            next += 1;
            next - 1
        })
    };
    let mut seqs = Vec::new();
    for (p, z) in t.zeta.iter().enumerate() {
        if z.vertices.len() != z.edges.len() + 1 || z.vertices.iter().any(|&v| v == 0 || v > s) {
            return Err(Error::InvalidWalk("malformed zeta path".to_string()));
        }
        let mut out = vec![fresh(&mut label[z.vertices[0]])];
        for (i, &e) in z.edges.iter().enumerate() {
            let (from, to) = (z.vertices[i], z.vertices[i + 1]);
            let &(a, b) = t.u.edges().get(e).ok_or_else(|| Error::InvalidWalk(format!("unknown edge {e}")))?;
            let fits = if t.u.is_directed() { (from, to) == (a, b) } else { edge_key(from, to, false) == (a, b) };
            if !fits {
                return Err(Error::InvalidWalk(format!("edge {e} does not join {from} and {to}")));
            }
            if interior[e].is_none() {
                let labels: Vec<usize> = (1..t.k[e]).map(|_| fresh(&mut None)).collect();
                interior[e] = Some((from, labels));
            }
            let (first_from, labels) = interior[e].as_ref().map(|(f, l)| (*f, l.clone())).unwrap_or_default();
            let reversed = if a == b {
                t.loop_reversed.get(p).and_then(|f| f.get(i)).copied().unwrap_or(false)
            } else {
                !t.u.is_directed() && from != first_from
            };
            if reversed {
                out.extend(labels.iter().rev());
            } else {
                out.extend(labels.iter());
            }
            out.push(fresh(&mut label[to]));
        }
        seqs.push(out);
    }
    match t.mode {
        WalkMode::Hermitian => WalkPath::hermitian(seqs.pop().unwrap_or_default()),
        WalkMode::DirectedPair => {
            let second = seqs.pop().unwrap_or_default();
            let first = seqs.pop().unwrap_or_default();
            WalkPath::directed_pair(first, second)
        }
    }
}

/// An encoding of `(U, zeta, k)` without loop orientations; two paths with equal keys
/// reduce to the same triple in the multigraph sense.
pub fn plain_key(t: &ReducedTriple) -> Vec<usize> {
    let mut key = vec![t.mode as usize, t.u.num_vertices(), t.u.num_edges()];
    for &(a, b) in t.u.edges() {
        key.extend([a, b]);
    }
    key.extend(&t.k);
    for z in &t.zeta {
        key.push(z.len());
        key.extend(&z.vertices);
        key.extend(&z.edges);
    }
    key
}

/// Vertex labels concatenated when all are single digits, comma-separated otherwise.
pub fn format_labels(seq: &[usize]) -> String {
    let parts: Vec<String> = seq.iter().map(|v| v.to_string()).collect();
    if seq.iter().all(|&v| v < 10) {
        parts.concat()
    } else {
        parts.join(",")
    }
}

fn edge_name(e: usize) -> String {
    if e < 26 {
        char::from(b'a' + e as u8).to_string()
    } else {
        format!("[{}]", e + 1)
    }
}

/// Each zeta path as alternating vertex labels and edge letters (`1a2b3..`).
pub fn format_zeta(t: &ReducedTriple) -> Vec<String> {
    t.zeta
        .iter()
        .map(|z| {
            let mut s = z.vertices[0].to_string();
            for (i, &e) in z.edges.iter().enumerate() {
                s.push_str(&edge_name(e));
                s.push_str(&z.vertices[i + 1].to_string());
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionReport {
    pub checks: Vec<PropertyCheck>,
    pub triple: Option<ReducedTriple>,
    /// Loop traversals (weight at least three, not the first traversal) whose direction
    /// is invisible in `(U, zeta, k)`.
    pub ambiguous_loop_traversals: usize,
}

impl ReductionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

fn zeta_normal(t: &ReducedTriple) -> bool {
    let mut next = 1;
    for z in &t.zeta {
        for &v in &z.vertices {
            if v == next {
                next += 1;
            } else if v > next {
                return false;
            }
        }
    }
    next == t.u.num_vertices() + 1
}

/// Runs the reduction and checks its structural properties. Failures are reported,
/// not returned as errors.
pub fn verify_reduction(path: &WalkPath) -> ReductionReport {
    let mut checks = Vec::new();
    let mut push = |name, passed| checks.push(PropertyCheck { name, passed });
    let t = match reduce_path(path) {
        Ok(t) => t,
        Err(_) => {
            push("reduction-defined", false);
            return ReductionReport { checks, triple: None, ambiguous_loop_traversals: 0 };
        }
    };
    push("reduction-defined", true);
    push("injective-roundtrip", expand(&t).as_ref() == Ok(path));

    let g = build_walk_graph(path);
    let gu = genus(&t.u);
    push("genus-preserved", gu.is_ok() && gu.as_ref().ok() == genus(&g).as_ref().ok());

    let endpoints_ok = match t.mode {
        WalkMode::Hermitian => t.zeta[0].vertices.first() == Some(&1) && t.zeta[0].vertices.last() == Some(&1),
        WalkMode::DirectedPair => t.zeta.iter().all(|z| z.vertices.first() == Some(&1) && z.vertices.last() == Some(&t.gamma)),
    };
    push("zeta-normal", endpoints_ok && zeta_normal(&t));

    let degrees_ok = t.u.vertices().iter().all(|&v| {
        let d = t.u.degree(v);
        if v == 1 || v == t.gamma {
            d >= 1
        } else {
            d >= 3
        }
    });
    push("degree-at-least-three", degrees_ok);

    push("weights-sum-edges", t.k.iter().sum::<usize>() == g.num_edges());
    let m = t.crossings();
    push("crossings-at-least-two", m.iter().all(|&c| c >= 2));
    push("length-identity", m.iter().zip(&t.k).map(|(a, b)| a * b).sum::<usize>() == 2 * path.ell());

    let (e, v) = (t.u.num_edges(), t.u.num_vertices());
    match gu {
        Ok(gu) => {
            push("edge-count-bounds", gu.max(1) <= e && e <= 3 * gu + 1);
            push("vertex-count-bound", v <= 2 * gu + 2);
            let deg_one = t.u.vertices().iter().filter(|&&x| t.u.degree(x) == 1).count();
            push("degree-bound", t.u.max_degree() <= 2 * gu + deg_one);
        }
        Err(_) => {
            push("edge-count-bounds", false);
            push("vertex-count-bound", false);
            push("degree-bound", false);
        }
    }

    let mut seen = BTreeSet::new();
    let mut ambiguous = 0;
    for z in &t.zeta {
        for &e in &z.edges {
            if !seen.insert(e) && t.is_loop(e) && t.k[e] >= 3 && t.mode == WalkMode::Hermitian {
                ambiguous += 1;
            }
        }
    }
    ReductionReport { checks, triple: Some(t), ambiguous_loop_traversals: ambiguous }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::parse_walk;

    const LONG_PATH: &str = include_str!("../../fixtures/long_path.txt");
    const DIRECTED_PAIR: &str = include_str!("../../fixtures/directed_pair.txt");

    #[test]
    fn long_path_reduction() {
        let p = parse_walk(LONG_PATH).unwrap();
        assert_eq!(p.ell(), 22);
        assert!(p.is_normal() && p.in_c());
        let g = build_walk_graph(&p);
        assert!(g.is_simple());
        assert!(g.edges().iter().any(|&(a, b)| a == b));
        let m = p.crossings();
        assert!(m.iter().all(|(&e, &c)| if e == (8, 9) { c == 4 } else { c == 2 }));
        let t = reduce_path(&p).unwrap();
        assert_eq!(t.gamma, 6);
        assert_eq!(format_zeta(&t), vec!["1a2b3c4d4c3e2b3c4d4c3f5g6g5h7i7j2e3f5h7i7j2a1"]);
        assert_eq!(t.k, vec![3, 4, 1, 1, 2, 1, 2, 1, 3, 3]);
        assert_eq!(genus(&g).unwrap(), 4);
        assert_eq!(genus(&t.u).unwrap(), 4);
        assert_eq!((t.u.num_edges(), t.u.num_vertices()), (10, 7));
        let report = verify_reduction(&p);
        assert!(report.all_passed(), "{:?}", report.failures());
        assert_eq!(report.ambiguous_loop_traversals, 1);
    }

    #[test]
    fn long_path_loop_twin_shares_plain_triple() {
        // Running the second pass around the weight-3 loop the other way gives another
        // normal path in C with the same multigraph triple.
        let p = parse_walk(LONG_PATH).unwrap();
        let WalkPath::Hermitian { xi, .. } = &p else { unreachable!() };
        let mut twin = xi.clone();
        let at = (30..xi.len() - 3).find(|&i| xi[i..i + 4] == [14, 16, 15, 14]).unwrap();
        twin[at + 1] = 15;
        twin[at + 2] = 16;
        let twin = WalkPath::hermitian(twin).unwrap();
        assert!(twin.in_c() && twin.is_normal() && twin != p);
        let (a, b) = (reduce_path(&p).unwrap(), reduce_path(&twin).unwrap());
        assert_eq!(plain_key(&a), plain_key(&b));
        assert_ne!(a, b);
        assert_eq!(expand(&b).unwrap(), twin);
    }

    #[test]
    fn directed_pair_reduction() {
        let p = parse_walk(DIRECTED_PAIR).unwrap();
        assert_eq!(p.ell(), 26);
        assert!(p.is_normal() && p.in_c());
        let m = p.crossings();
        // Counts as printed by the two sequences: the spur 4 -> 15 -> 4 is crossed three
        // times each way, the cycle 2 3 4 5 6 12 four times on its 2 -> 6 stretch.
        let four = [(2, 3), (3, 4), (4, 5), (5, 6), (6, 12)];
        let three = [(4, 15), (15, 4)];
        for (e, &c) in &m {
            let want = if four.contains(e) { 4 } else if three.contains(e) { 3 } else { 2 };
            assert_eq!(c, want, "{e:?}");
        }
        let t = reduce_path(&p).unwrap();
        assert_eq!(t.gamma, 9);
        assert!(t.u.is_simple());
        assert_eq!(format_labels(&t.zeta[0].vertices), "12345666775677545489");
        assert_eq!(format_labels(&t.zeta[1].vertices), "12334823334823489");
        let report = verify_reduction(&p);
        assert!(report.all_passed(), "{:?}", report.failures());
    }

    #[test]
    fn no_contraction_when_no_degree_two_vertices() {
        // Both vertices are exceptional, so nothing is contracted.
        let p = WalkPath::hermitian(vec![1, 2, 1]).unwrap();
        let t = reduce_path(&p).unwrap();
        assert_eq!(t.k, vec![1]);
        let g = build_walk_graph(&p);
        assert_eq!(t.u, MultiGraph::new(false, g.vertices().to_vec(), g.edges().to_vec()).unwrap());
    }

    #[test]
    fn rejects_non_normal_and_single_crossings() {
        let p = WalkPath::hermitian(vec![2, 1, 2]).unwrap();
        assert!(matches!(reduce_path(&p), Err(Error::NotNormal)));
        let q = WalkPath::hermitian(vec![1, 2, 3, 1, 3, 2, 1]).unwrap();
        assert!(reduce_path(&q).is_ok());
        let r = WalkPath::directed_pair(vec![1, 2], vec![1, 2]).unwrap();
        assert!(reduce_path(&r).is_ok());
        let s = WalkPath::directed_pair(vec![1, 2, 3], vec![1, 3, 3]).unwrap();
        assert!(matches!(reduce_path(&s), Err(Error::InvalidWalk(_))));
    }

    #[test]
    fn exhaustive_small_sweep() {
        for mode in [WalkMode::Hermitian, WalkMode::DirectedPair] {
            for ell in 1..=3 {
                let paths = crate::walks::enumerate_normal(4, ell, mode).unwrap();
                let mut keys = BTreeSet::new();
                for p in &paths {
                    let r = verify_reduction(p);
                    assert!(r.all_passed(), "{p:?}: {:?}", r.failures());
                    assert!(keys.insert(plain_key(r.triple.as_ref().unwrap())), "collision at {p:?}");
                }
            }
        }
    }

    #[test]
    fn loop_orientation_breaks_plain_injectivity_at_length_four() {
        let a = WalkPath::hermitian(vec![1, 2, 3, 1, 4, 1, 2, 3, 1]).unwrap();
        let b = WalkPath::hermitian(vec![1, 2, 3, 1, 4, 1, 3, 2, 1]).unwrap();
        let (ta, tb) = (reduce_path(&a).unwrap(), reduce_path(&b).unwrap());
        assert_eq!(plain_key(&ta), plain_key(&tb));
        assert_eq!(expand(&ta).unwrap(), a);
        assert_eq!(expand(&tb).unwrap(), b);
    }
}
