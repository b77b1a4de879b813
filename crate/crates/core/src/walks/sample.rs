//! Rejection sampling of normal paths in `C`.
//!
//! Proposals are nonbacktracking closed walks with the forced turn at `xi_l`, run on a
//! random small skeleton graph (a random tree plus a few extra edges, loops allowed) so
//! that edges are revisited often. Proposals with an edge crossed exactly once are
//! rejected; accepted paths are normalized. Every element of the normal set has
//! positive probability, which is all the property sweeps need.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::WalkPath;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PathSampler {
    n: usize,
    ell: usize,
    attempts: u64,
    accepted: u64,
}

impl PathSampler {
    pub fn new(n: usize, ell: usize) -> Result<Self> {
        if n < 2 || ell < 1 {
            return Err(Error::InvalidParameter("sampling needs n >= 2 and l >= 1".into()));
        }
        Ok(Self { n, ell, attempts: 0, accepted: 0 })
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    fn skeleton<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<usize>> {
        let s = rng.random_range(2..=self.n.min(self.ell + 1));
        let mut edges = BTreeSet::new();
        for v in 1..s {
            let u = rng.random_range(0..v);
            edges.insert((u, v));
        }
        let extra = rng.random_range(0..=self.ell.min(4));
        for _ in 0..extra {
            let a = rng.random_range(0..s);
            let b = rng.random_range(0..s);
            edges.insert((a.min(b), a.max(b)));
        }
        let mut adj = vec![Vec::new(); s];
        for (a, b) in edges {
            adj[a].push(b);
            if a != b {
                adj[b].push(a);
            }
        }
        adj
    }

    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<usize>> {
        let adj = self.skeleton(rng);
        let ell = self.ell;
        let mut xi = vec![0usize; 2 * ell + 1];
        xi[0] = rng.random_range(0..adj.len());
        for pos in 1..2 * ell {
            if pos == ell + 1 {
                xi[pos] = xi[ell - 1];
                continue;
            }
            let cur = xi[pos - 1];
            let back = if pos >= 2 && pos - 1 != ell { Some(xi[pos - 2]) } else { None };
            let choices: Vec<usize> = adj[cur].iter().copied().filter(|&c| Some(c) != back).collect();
            if choices.is_empty() {
                return None;
            }
            xi[pos] = choices[rng.random_range(0..choices.len())];
        }
        xi[2 * ell] = xi[0];
        Some(xi.into_iter().map(|v| v + 1).collect())
    }

    /// Draws until a proposal lands in `C` and returns its normal form.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> WalkPath {
        loop {
            self.attempts += 1;
            let Some(xi) = self.propose(rng) else { continue };
            let Ok(path) = WalkPath::hermitian(xi) else { continue };
            if path.in_c() {
                self.accepted += 1;
                return path.normalize();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::SeedSpec;
    use crate::walks::verify_reduction;

    #[test]
    fn samples_are_normal_members_of_c() {
        let mut rng = SeedSpec::new(7, 0).rng();
        let mut s = PathSampler::new(8, 6).unwrap();
        let mut distinct = BTreeSet::new();
        for _ in 0..500 {
            let p = s.sample(&mut rng);
            assert!(p.in_c() && p.is_normal() && p.max_label() <= 8);
            assert!(verify_reduction(&p).all_passed());
            distinct.insert(p);
        }
        assert!(s.acceptance_rate() > 0.001);
        assert!(distinct.len() > 100);
    }
}
