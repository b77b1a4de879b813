//! Random instances and verification sweeps shared by the test suites and the CLI.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::dense::{self, null_vector};
use crate::ensembles::{sample, sample_rademacher, EnsembleSpec, SeedSpec};
use crate::iharabass::{guard_value, lambda_matrices, recover_b_eigvec};
use crate::model::{EntryNorms, SparseMatrix};
use crate::nbop::{build_nb_operator, nb_apply, nb_dense, NbMode};
use crate::spectra::{dense_spectrum, spectral_radius, trace_moment, SpectralConfig, TraceMode};
use crate::{Result, C64};

/// Eigenvalues with a guard value at or below this are skipped by the sweeps.
pub const SWEEP_GUARD: f64 = 1e-6;

/// Hermitian matrix with zero diagonal: each pair `i < j` is kept with probability
/// `density` and gets modulus in `(0.1, 1]` with a random sign (real) or phase (complex).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64, complex: bool) -> Result<SparseMatrix> {
    let mut t = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() >= density {
                continue;
            }
            let r = 0.1 + 0.9 * rng.random::<f64>();
            let v = if complex {
                C64::from_polar(r, core::f64::consts::TAU * rng.random::<f64>())
            } else if rng.random::<bool>() {
                C64::new(r, 0.0)
            } else {
                C64::new(-r, 0.0)
            };
            t.push((i, j, v));
            t.push((j, i, v.conj()));
        }
    }
    SparseMatrix::from_triplets(n, t, true)
}

/// Simple graph with `G(n, p)` edges.
pub fn random_support<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Result<SparseMatrix> {
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                e.push((i, j));
            }
        }
    }
    SparseMatrix::from_edges(n, &e, 1.0)
}

/// A random instance from one of five families, chosen by `family % 5`:
/// real sparse Hermitian, complex sparse Hermitian, centered `G(n, d/n)`,
/// centered two-block model, Rademacher on a random support.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, family: usize, n_max: usize) -> Result<(String, SparseMatrix)> {
    let n_max = n_max.max(3);
    let seed = SeedSpec::new(rng.random(), rng.random());
    match family % 5 {
        0 | 1 => {
            let n = rng.random_range(2..=n_max);
            let density = 0.05 + 0.5 * rng.random::<f64>();
            let complex = family % 5 == 1;
            let h = random_hermitian(rng, n, density, complex)?;
            Ok((format!("{}-hermitian n={n}", if complex { "complex" } else { "real" }), h))
        }
        2 => {
            let n = rng.random_range(3..=n_max.min(24));
            let d = 1.0 + (n as f64 - 2.0) * rng.random::<f64>();
            let spec = EnsembleSpec::homogeneous_er(n, d)?;
            Ok((format!("centered-er n={n} d={d:.3}"), sample(&spec, seed)?.h_sparse(n)?))
        }
        3 => {
            let n = rng.random_range(4..=n_max.min(24));
            let a = n / 2;
            let p_in = 0.2 + 0.8 * rng.random::<f64>();
            let p_out = p_in * rng.random::<f64>();
            let spec = EnsembleSpec::sbm(&[a, n - a], &[p_in, p_out, p_out, p_in])?;
            Ok((format!("centered-sbm n={n}"), sample(&spec, seed)?.h_sparse(n)?))
        }
        _ => {
            let n = rng.random_range(3..=n_max);
            let p = (2.0 + 4.0 * rng.random::<f64>()) / n as f64;
            let support = random_support(rng, n, p.min(1.0))?;
            let q = 1.0 + 3.0 * rng.random::<f64>();
            Ok((format!("rademacher n={n} q={q:.3}"), sample_rademacher(&support, q, seed)?))
        }
    }
}

/// Instance meeting the hypotheses of the positive-semidefinite gap: entries bounded
/// by `delta <= 1` and squared row sums at most `1 + delta`. Rows are scaled so the
/// largest squared row sum is exactly 1 and `delta` is the largest entry modulus.
pub fn psd_instance<R: Rng + ?Sized>(rng: &mut R, n_max: usize) -> Result<(SparseMatrix, f64)> {
    loop {
        let n = rng.random_range(2..=n_max.max(2));
        let density = (1.0 + 5.0 * rng.random::<f64>()) / n as f64;
        let complex = rng.random::<bool>();
        let h = random_hermitian(rng, n, density.min(1.0), complex)?;
        if h.nnz() == 0 {
            continue;
        }
        let s = h.norm_2_to_inf();
        let h = h.scaled(1.0 / s);
        // Rescaling can leave a lone entry one ulp above 1.
        let delta = h.norm_1_to_inf().min(1.0);
        return Ok((h, delta));
    }
}

/// Unit-weight regular graphs with known `rho(B) = degree - 1`.
pub fn regular_graphs() -> Result<Vec<(&'static str, SparseMatrix, f64)>> {
    let complete = |n: usize| -> Vec<(usize, usize)> { (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect() };
    let mut petersen = Vec::new();
    for i in 0..5 {
        petersen.push((i, (i + 1) % 5));
        petersen.push((i, i + 5));
        petersen.push((i + 5, (i + 2) % 5 + 5));
    }
    Ok(alloc::vec![
        ("triangle", SparseMatrix::from_edges(3, &complete(3), 1.0)?, 1.0),
        ("K4", SparseMatrix::from_edges(4, &complete(4), 1.0)?, 2.0),
        ("K5", SparseMatrix::from_edges(5, &complete(5), 1.0)?, 3.0),
        ("petersen", SparseMatrix::from_edges(10, &petersen, 1.0)?, 2.0),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryReport {
    pub checked: usize,
    pub skipped: usize,
    /// Largest `||B x − λ x|| / (max(1, |λ|) ||x||)`.
    pub worst_residual: f64,
}

/// Rebuilds an eigenvector of `B` from a null vector of `M(λ) − H(λ)` for every
/// eigenvalue of dense `B` whose guard exceeds [`SWEEP_GUARD`].
pub fn eigvec_recovery(h: &SparseMatrix) -> Result<RecoveryReport> {
    let op = build_nb_operator(h, NbMode::SupportRestricted)?;
    let mut rep = RecoveryReport { checked: 0, skipped: 0, worst_residual: 0.0 };
    if op.dim() == 0 {
        return Ok(rep);
    }
    for lam in dense_spectrum(&nb_dense(&op)?)? {
        if guard_value(h, lam).0 <= SWEEP_GUARD {
            rep.skipped += 1;
            continue;
        }
        let k = lambda_matrices(h, lam)?.difference();
        let (y, _) = null_vector(&k)?;
        let x = recover_b_eigvec(h, lam, &y, f64::INFINITY)?;
        let bx = nb_apply(&op, &x)?;
        let r = dense::norm2(&bx.iter().zip(&x).map(|(a, b)| a - lam * b).collect::<Vec<_>>());
        let nx = dense::norm2(&x);
        let res = if nx == 0.0 { f64::INFINITY } else { r / (lam.norm().max(1.0) * nx) };
        rep.worst_residual = rep.worst_residual.max(res);
        rep.checked += 1;
    }
    Ok(rep)
}

/// `(tr B^l B^{*l})^{1/(2l)} − rho(B)` for `l = 1..=max_ell`, with exact traces.
pub fn gelfand_margins(h: &SparseMatrix, max_ell: usize, cfg: &SpectralConfig) -> Result<Vec<f64>> {
    let op = build_nb_operator(h, NbMode::SupportRestricted)?;
    let rho = spectral_radius(&op, cfg)?.rho;
    (1..=max_ell)
        .map(|ell| {
            let t = trace_moment(&op, ell, TraceMode::ExactSmall)?.value;
            Ok(t.max(0.0).powf(1.0 / (2.0 * ell as f64)) - rho)
        })
        .collect()
}
