//! Vertex-labelled multigraphs and the walk graph of a path.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{edge_key, WalkMode, WalkPath};
use crate::{Error, Result};

/// A multigraph on sorted vertex labels. Undirected edges are stored as `(min, max)`;
/// loops count twice toward the degree. Directed edges are `(tail, head)` and the
/// degree is indegree plus outdegree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiGraph {
    directed: bool,
    vertices: Vec<usize>,
    edges: Vec<(usize, usize)>,
    in_deg: Vec<usize>,
    out_deg: Vec<usize>,
}

impl MultiGraph {
    pub fn new(directed: bool, mut vertices: Vec<usize>, edges: Vec<(usize, usize)>) -> Result<Self> {
        vertices.sort_unstable();
        vertices.dedup();
        let mut in_deg = vec![0; vertices.len()];
        let mut out_deg = vec![0; vertices.len()];
        let mut stored = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let ia = vertices.binary_search(&a).map_err(|_| Error::InvalidWalk(format!("edge endpoint {a} is not a vertex")))?;
            let ib = vertices.binary_search(&b).map_err(|_| Error::InvalidWalk(format!("edge endpoint {b} is not a vertex")))?;
            out_deg[ia] += 1;
            in_deg[ib] += 1;
            stored.push(if directed { (a, b) } else { edge_key(a, b, false) });
        }
        Ok(Self { directed, vertices, edges: stored, in_deg, out_deg })
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    fn index(&self, v: usize) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    /// Total degree; 0 for labels that are not vertices.
    pub fn degree(&self, v: usize) -> usize {
        self.index(v).map_or(0, |i| self.in_deg[i] + self.out_deg[i])
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.index(v).map_or(0, |i| self.in_deg[i])
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.index(v).map_or(0, |i| self.out_deg[i])
    }

    pub fn max_degree(&self) -> usize {
        self.vertices.iter().map(|&v| self.degree(v)).max().unwrap_or(0)
    }

    /// No two edges share the same endpoints.
    pub fn is_simple(&self) -> bool {
        let set: BTreeSet<_> = self.edges.iter().collect();
        set.len() == self.edges.len()
    }

    /// Weak connectivity.
    pub fn is_connected(&self) -> bool {
        let s = self.vertices.len();
        if s == 0 {
            return true;
        }
        let mut parent: Vec<usize> = (0..s).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut comps = s;
        for &(a, b) in &self.edges {
            let (ia, ib) = (self.index(a).unwrap_or(0), self.index(b).unwrap_or(0));
            let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
            if ra != rb {
                parent[ra] = rb;
                comps -= 1;
            }
        }
        comps == 1
    }

    /// `|E| - |V| + 1` for a connected multigraph.
    pub fn genus(&self) -> Result<usize> {
        genus(self)
    }
}

/// `|E| - |V| + 1`; errors on disconnected input.
pub fn genus(g: &MultiGraph) -> Result<usize> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(g.num_edges() + 1 - g.num_vertices())
}

/// The simple graph on the visited vertices whose edges are the traversed pairs
/// (unordered in Hermitian mode, ordered in directed-pair mode).
pub fn build_walk_graph(path: &WalkPath) -> MultiGraph {
    let directed = path.mode() == WalkMode::DirectedPair;
    let mut vertices = Vec::new();
    let mut edges = BTreeSet::new();
    for s in path.sequences() {
        vertices.extend_from_slice(s);
        for w in s.windows(2) {
            edges.insert(edge_key(w[0], w[1], directed));
        }
    }
    // Endpoints come from the vertex list, so construction cannot fail.
    MultiGraph::new(directed, vertices, edges.into_iter().collect()).unwrap_or_else(|_| unreachable!())
}
