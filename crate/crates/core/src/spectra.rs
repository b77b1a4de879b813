//! Spectral radius of `B`, extreme eigenvalues of Hermitian `H`, the maximal real
//! eigenvalue of `B`, and trace moments `tr B^l B^{*l}`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::dense::{self, DenseMatrix};
use crate::ensembles::SeedSpec;
use crate::model::{LinearOp, SparseMatrix};
use crate::nbop::{build_nb_operator, nb_core, nb_dense, NbMode, NbOperator};
use crate::{Error, Result, Scalar, C64};

/// Dimension limit of [`dense_spectrum`].
pub const DENSE_LIMIT: usize = 4096;
/// Edge-count limit of exact trace moments.
pub const EXACT_TRACE_LIMIT: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dense,
    Iterative,
}

/// Solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Dense below the cutoffs, iterative above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Relative tolerance of the iterative solvers.
    pub tol: f64,
    /// Krylov dimension cap per Lanczos cycle.
    pub max_iter: usize,
    /// Krylov dimension per thick-restart Arnoldi cycle (spectral radius).
    pub arnoldi_dim: usize,
    /// Independent random starts (spectral radius) or restart cycles (Lanczos).
    pub restarts: usize,
    pub seed: SeedSpec,
    pub solver: Solver,
    /// `B` dimension up to which [`Solver::Auto`] solves densely.
    pub dense_cutoff_b: usize,
    /// `H` dimension up to which [`Solver::Auto`] solves densely.
    pub dense_cutoff_h: usize,
    /// Power steps recorded in the Gelfand certificate.
    pub power_steps: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            arnoldi_dim: 150,
            restarts: 40,
            seed: SeedSpec::new(0, 0),
            solver: Solver::Auto,
            dense_cutoff_b: 128,
            dense_cutoff_h: 256,
            power_steps: 30,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || self.arnoldi_dim < 2 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "tol > 0, max_iter >= 1, arnoldi_dim >= 2 and restarts >= 1 required".into(),
            ));
        }
        Ok(())
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_seed(mut self, seed: SeedSpec) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Full eigenvalue multiset of a dense matrix.
pub fn dense_spectrum(m: &DenseMatrix<C64>) -> Result<Vec<C64>> {
    if m.rows() > DENSE_LIMIT {
        return Err(Error::SizeGuard { what: "dense spectrum", size: m.rows() as u128, limit: DENSE_LIMIT as u128 });
    }
    dense::eigenvalues(m)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x.conj() * y)
}

fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.abs_sqr()).sum::<f64>().sqrt()
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize<T: Scalar>(x: &mut [T]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        let s = 1.0 / n;
        for v in x.iter_mut() {
            *v = v.scale(s);
        }
    }
    n
}

fn random_vector<T: Scalar>(rng: &mut impl Rng, len: usize) -> Vec<T> {
    (0..len)
        .map(|_| {
            let re = rng.random::<f64>() * 2.0 - 1.0;
            let im = rng.random::<f64>() * 2.0 - 1.0;
            T::from_complex(C64::new(re, im))
        })
        .collect()
}

/// Estimate of `rho(B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusEstimate {
    pub rho: f64,
    /// Power-iteration samples `r_l = ||B^l x||^(1/l)` for a unit start `x`
    /// (diagnostic, not a bound).
    pub certificate: Vec<f64>,
    pub method: Method,
    pub converged: bool,
    /// Matrix-vector products spent.
    pub iterations: usize,
}

fn power_certificate<T: Scalar>(op: &NbOperator, x0: &[T], steps: usize) -> Vec<f64> {
    let mut x = x0.to_vec();
    normalize(&mut x);
    let mut y = vec![T::zero(); x.len()];
    let mut log_norm = 0.0;
    let mut out = Vec::with_capacity(steps);
    for l in 1..=steps {
        LinearOp::apply(op, &x, &mut y);
        let nrm = normalize(&mut y);
        if nrm == 0.0 {
            out.extend(core::iter::repeat_n(0.0, steps + 1 - l));
            break;
        }
        log_norm += nrm.ln();
        out.push((log_norm / l as f64).exp());
        core::mem::swap(&mut x, &mut y);
    }
    out
}

struct ArnoldiOutcome {
    theta: C64,
    converged: bool,
    matvecs: usize,
}

/// Thick-restarted Arnoldi for the largest-modulus eigenvalue. Each restart keeps an
/// orthonormal basis of the leading Ritz subspace (real and imaginary parts for a
/// real operator), which preserves the Arnoldi relation `A V = V S + f e^*`.
fn arnoldi_radius<T: Scalar>(op: &NbOperator, start: Vec<T>, cfg: &SpectralConfig) -> Result<ArnoldiOutcome> {
    let dim = op.dim();
    let k = cfg.arnoldi_dim.min(dim).max(1);
    let keep_max = (k / 2).max(1);
    let mut v0 = start;
    if normalize(&mut v0) == 0.0 {
        return Ok(ArnoldiOutcome { theta: C64::new(0.0, 0.0), converged: true, matvecs: 0 });
    }
    let mut basis: Vec<Vec<T>> = vec![v0];
    // Leading block of the projected matrix carried over from the last restart.
    let mut carried = DenseMatrix::<T>::zeros(1, 0);
    let mut matvecs = 0;
    let mut best = C64::new(0.0, 0.0);
    let mut w = vec![T::zero(); dim];
    for _cycle in 0..cfg.restarts {
        let m = basis.len() - 1;
        let mut h = DenseMatrix::<T>::zeros(k + 1, k);
        for i in 0..=m {
            for j in 0..m {
                h[(i, j)] = carried[(i, j)];
            }
        }
        let mut kk = k;
        let mut breakdown = false;
        for j in m..k {
            LinearOp::apply(op, &basis[j], &mut w);
            matvecs += 1;
            let wnorm0 = norm(&w);
            for _pass in 0..2 {
                for (i, bi) in basis.iter().enumerate() {
                    let c = dot(bi, &w);
                    h[(i, j)] += c;
                    axpy(-c, bi, &mut w);
                }
            }
            let beta = norm(&w);
            h[(j + 1, j)] = T::from_real(beta);
            if beta <= 1e-13 * wnorm0.max(f64::MIN_POSITIVE) || beta == 0.0 {
                kk = j + 1;
                breakdown = true;
                break;
            }
            basis.push(w.iter().map(|v| v.scale(1.0 / beta)).collect());
        }
        let hk = DenseMatrix::from_fn(kk, kk, |i, j| h[(i, j)]);
        let hkc = hk.to_complex();
        let ritz = dense::eigenvalues(&hkc)?;
        let mut order: Vec<usize> = (0..ritz.len()).collect();
        order.sort_by(|&a, &b| ritz[b].norm().total_cmp(&ritz[a].norm()));
        let theta = ritz[order[0]];
        best = theta;
        let y = dense::eigenvector_for(&hkc, theta)?;
        let beta = if breakdown { 0.0 } else { h[(kk, kk - 1)].abs() };
        let resid = beta * y[kk - 1].norm() / norm(&y);
        if resid <= cfg.tol * theta.norm().max(f64::MIN_POSITIVE) || theta.norm() < 1e-300 && resid < 1e-300 {
            return Ok(ArnoldiOutcome { theta, converged: true, matvecs });
        }
        // Orthonormal basis Q of the leading Ritz vectors, in the operator's field.
        let mut q: Vec<Vec<T>> = Vec::new();
        let mut used: Vec<C64> = Vec::new();
        let push = |mut z: Vec<T>, q: &mut Vec<Vec<T>>| {
            let n0 = norm(&z);
            for _pass in 0..2 {
                for qi in q.iter() {
                    let c = dot(qi, &z);
                    axpy(-c, qi, &mut z);
                }
            }
            let nz = norm(&z);
            if nz > 1e-8 * n0 {
                q.push(z.iter().map(|v| v.scale(1.0 / nz)).collect());
            }
        };
        for &idx in &order {
            if q.len() >= keep_max.min(kk - 1) {
                break;
            }
            let t = ritz[idx];
            let tol_pair = 1e-10 * (1.0 + t.norm());
            if !T::IS_COMPLEX && used.iter().any(|u| (u.conj() - t).norm() <= tol_pair) {
                continue;
            }
            used.push(t);
            let yv = if idx == order[0] { y.clone() } else { dense::eigenvector_for(&hkc, t)? };
            if T::IS_COMPLEX {
                push(yv.iter().map(|&c| T::from_complex(c)).collect(), &mut q);
            } else {
                push(yv.iter().map(|c| T::from_real(c.re)).collect(), &mut q);
                if t.im.abs() > tol_pair {
                    push(yv.iter().map(|c| T::from_real(c.im)).collect(), &mut q);
                }
            }
        }
        if q.is_empty() || breakdown {
            break;
        }
        let mk = q.len();
        // S = Q^* H Q and the spill row beta * e_k^* Q.
        let mut next = DenseMatrix::<T>::zeros(mk + 1, mk);
        for b in 0..mk {
            let hq: Vec<T> = (0..kk).map(|i| (0..kk).fold(T::zero(), |acc, j| acc + hk[(i, j)] * q[b][j])).collect();
            for a in 0..mk {
                next[(a, b)] = dot(&q[a], &hq);
            }
            next[(mk, b)] = T::from_real(beta) * q[b][kk - 1];
        }
        let mut nb: Vec<Vec<T>> = Vec::with_capacity(k + 1);
        for qa in &q {
            let mut v = vec![T::zero(); dim];
            for (i, bi) in basis.iter().take(kk).enumerate() {
                axpy(qa[i], bi, &mut v);
            }
            nb.push(v);
        }
        nb.push(basis.swap_remove(kk));
        basis = nb;
        carried = next;
    }
    Ok(ArnoldiOutcome { theta: best, converged: false, matvecs })
}

fn radius_iterative<T: Scalar>(op: &NbOperator, cfg: &SpectralConfig) -> Result<RadiusEstimate> {
    let dim = op.dim();
    let mut rng = cfg.seed.rng();
    let mut certificate = Vec::new();
    let mut rho = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;
    let starts = cfg.restarts.clamp(1, 3);
    for s in 0..starts {
        let x0: Vec<T> = random_vector(&mut rng, dim);
        if s == 0 {
            certificate = power_certificate(op, &x0, cfg.power_steps);
            iterations += cfg.power_steps;
        }
        let out = arnoldi_radius(op, x0, cfg)?;
        iterations += out.matvecs;
        if out.converged {
            if !converged || out.theta.norm() > rho {
                rho = out.theta.norm();
            }
            converged = true;
            break;
        }
        rho = rho.max(out.theta.norm());
    }
    Ok(RadiusEstimate { rho, certificate, method: Method::Iterative, converged, iterations })
}

/// `rho(B)`, dense for small operators and by restarted Arnoldi otherwise. Both run
/// on the operator of [`nb_core`], so forests give exactly 0 and the result does not
/// depend on the mode of `op`.
pub fn spectral_radius(op: &NbOperator, cfg: &SpectralConfig) -> Result<RadiusEstimate> {
    cfg.validate()?;
    let core = build_nb_operator(&nb_core(op.h())?, NbMode::SupportRestricted)?;
    let op = &core;
    let dim = op.dim();
    if dim == 0 {
        return Ok(RadiusEstimate { rho: 0.0, certificate: Vec::new(), method: Method::Dense, converged: true, iterations: 0 });
    }
    let real = op.h().is_real();
    let dense = match cfg.solver {
        Solver::Dense => true,
        Solver::Iterative => false,
        Solver::Auto => dim <= cfg.dense_cutoff_b,
    };
    if dense {
        let ev = dense_spectrum(&nb_dense(op)?)?;
        let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut rng = cfg.seed.rng();
        let certificate = if real {
            power_certificate::<f64>(op, &random_vector(&mut rng, dim), cfg.power_steps)
        } else {
            power_certificate::<C64>(op, &random_vector(&mut rng, dim), cfg.power_steps)
        };
        return Ok(RadiusEstimate { rho, certificate, method: Method::Dense, converged: true, iterations: cfg.power_steps });
    }
    if real {
        radius_iterative::<f64>(op, cfg)
    } else {
        radius_iterative::<C64>(op, cfg)
    }
}

/// Largest eigenvalue of `B` with `|Im| <= tol (1 + |lambda|)`, via the dense path on
/// the operator of [`nb_core`]; the pruned edges only add the eigenvalue 0.
pub fn max_real_eigenvalue(op: &NbOperator, tol: f64) -> Result<Option<f64>> {
    if op.dim() > DENSE_LIMIT {
        return Err(Error::SizeGuard { what: "max real eigenvalue", size: op.dim() as u128, limit: DENSE_LIMIT as u128 });
    }
    if op.dim() == 0 {
        return Ok(None);
    }
    let core = build_nb_operator(&nb_core(op.h())?, NbMode::SupportRestricted)?;
    let ev = if core.dim() == 0 { Vec::new() } else { dense_spectrum(&nb_dense(&core)?)? };
    let zero = (core.dim() < op.dim()).then_some(0.0);
    Ok(ev.iter().filter(|z| z.im.abs() <= tol * (1.0 + z.norm())).map(|z| z.re).chain(zero).reduce(f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianExtremes {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub opnorm: f64,
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
}

/// Which Ritz values must converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Want {
    Extremes,
    Largest,
}

struct LanczosOutcome<T> {
    max: f64,
    min: f64,
    max_vec: Vec<T>,
    converged: bool,
    matvecs: usize,
}

/// Lanczos with full reorthogonalisation and explicit restarts. Vectors in `locked`
/// are projected out of every Krylov vector.
fn lanczos<T: Scalar, O: LinearOp<T> + ?Sized>(
    op: &O,
    locked: &[Vec<T>],
    want: Want,
    cfg: &SpectralConfig,
) -> Result<LanczosOutcome<T>> {
    let n = op.dim();
    let mut rng = cfg.seed.rng();
    let mut start: Vec<T> = random_vector(&mut rng, n);
    let kmax = cfg.max_iter.max(2).min(n.saturating_sub(locked.len()).max(1));
    let mut matvecs = 0;
    let mut last = (0.0, 0.0, Vec::new());
    for _cycle in 0..cfg.restarts {
        for l in locked {
            let c = dot(l, &start);
            axpy(-c, l, &mut start);
        }
        if normalize(&mut start) == 0.0 {
            return Ok(LanczosOutcome { max: 0.0, min: 0.0, max_vec: start, converged: true, matvecs });
        }
        let mut basis: Vec<Vec<T>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![T::zero(); n];
        let mut done = false;
        let mut converged = false;
        let mut result = None;
        for j in 0..kmax {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w).re();
            alpha.push(a);
            for _pass in 0..2 {
                for b in basis.iter().chain(locked.iter()) {
                    let c = dot(b, &w);
                    axpy(-c, b, &mut w);
                }
            }
            let bnorm = norm(&w);
            let scale = alpha.iter().map(|x| x.abs()).fold(0.0, f64::max).max(beta.iter().copied().fold(0.0, f64::max));
            let breakdown = bnorm <= 1e-12 * scale.max(f64::MIN_POSITIVE) || j + 1 == n.saturating_sub(locked.len());
            let check = breakdown || j + 1 == kmax || (j + 1) % 8 == 0;
            if check {
                let (vals, z) = dense::tridiagonal_eigen_vectors(&alpha, &beta)?;
                let k = vals.len();
                let (imax, imin) = extreme_indices(&vals);
                let res = |i: usize| if breakdown { 0.0 } else { bnorm * z[(k - 1, i)].abs() };
                let tol = cfg.tol * vals[imax].abs().max(vals[imin].abs()).max(f64::MIN_POSITIVE);
                let ok = match want {
                    Want::Extremes => res(imax) <= tol && res(imin) <= tol,
                    Want::Largest => res(imax) <= tol,
                };
                if ok || breakdown || j + 1 == kmax {
                    converged = ok || breakdown;
                    let ritz = |i: usize| {
                        let mut v = vec![T::zero(); n];
                        for (r, b) in basis.iter().enumerate() {
                            axpy(T::from_real(z[(r, i)]), b, &mut v);
                        }
                        v
                    };
                    let vmax = ritz(imax);
                    let restart = match want {
                        Want::Extremes => {
                            let mut v = vmax.clone();
                            axpy(T::one(), &ritz(imin), &mut v);
                            v
                        }
                        Want::Largest => vmax.clone(),
                    };
                    result = Some((vals[imax], vals[imin], vmax, restart));
                    done = true;
                }
            }
            if done {
                break;
            }
            beta.push(bnorm);
            let mut next = w.clone();
            for v in next.iter_mut() {
                *v = v.scale(1.0 / bnorm);
            }
            basis.push(next);
        }
        let (mx, mn, vmax, restart) = result.expect("Lanczos cycle always reports");
        if converged {
            return Ok(LanczosOutcome { max: mx, min: mn, max_vec: vmax, converged: true, matvecs });
        }
        last = (mx, mn, vmax);
        start = restart;
    }
    Ok(LanczosOutcome { max: last.0, min: last.1, max_vec: last.2, converged: false, matvecs })
}

fn extreme_indices(vals: &[f64]) -> (usize, usize) {
    let mut imax = 0;
    let mut imin = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[imax] {
            imax = i;
        }
        if v < vals[imin] {
            imin = i;
        }
    }
    (imax, imin)
}

/// Extreme eigenvalues of a Hermitian operator by Lanczos.
pub fn hermitian_extremes_op<T: Scalar, O: LinearOp<T> + ?Sized>(op: &O, cfg: &SpectralConfig) -> Result<HermitianExtremes> {
    cfg.validate()?;
    if op.dim() == 0 {
        return Ok(HermitianExtremes { lambda_max: 0.0, lambda_min: 0.0, opnorm: 0.0, method: Method::Iterative, converged: true, iterations: 0 });
    }
    let out = lanczos(op, &[], Want::Extremes, cfg)?;
    Ok(HermitianExtremes {
        lambda_max: out.max,
        lambda_min: out.min,
        opnorm: out.max.abs().max(out.min.abs()),
        method: Method::Iterative,
        converged: out.converged,
        iterations: out.matvecs,
    })
}

/// Extreme eigenvalues of a Hermitian dense matrix.
pub fn hermitian_extremes_dense<T: Scalar>(m: &DenseMatrix<T>) -> Result<HermitianExtremes> {
    let ev = dense::hermitian_eigenvalues(m)?;
    let (lambda_min, lambda_max) = match (ev.first(), ev.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 0.0),
    };
    Ok(HermitianExtremes {
        lambda_max,
        lambda_min,
        opnorm: lambda_max.abs().max(lambda_min.abs()),
        method: Method::Dense,
        converged: true,
        iterations: 0,
    })
}

/// `(lambda_max, lambda_min, ||H||)` of a Hermitian sparse matrix.
pub fn hermitian_extremes(h: &SparseMatrix, cfg: &SpectralConfig) -> Result<HermitianExtremes> {
    if !h.is_hermitian() {
        return Err(Error::InvalidParameter("hermitian_extremes needs a Hermitian matrix".into()));
    }
    let dense = match cfg.solver {
        Solver::Dense => true,
        Solver::Iterative => false,
        Solver::Auto => h.n() <= cfg.dense_cutoff_h,
    };
    match (dense, h.is_real()) {
        (true, true) => hermitian_extremes_dense(&h.to_dense().real_part()),
        (true, false) => hermitian_extremes_dense(&h.to_dense()),
        (false, true) => hermitian_extremes_op::<f64, _>(h, cfg),
        (false, false) => hermitian_extremes_op::<C64, _>(h, cfg),
    }
}

/// The two largest eigenvalues (with multiplicity) of a real symmetric operator: a
/// Lanczos run for the top eigenvector, then a second run with it projected out.
pub fn top_two_eigenvalues<O: LinearOp<f64> + ?Sized>(op: &O, cfg: &SpectralConfig) -> Result<(f64, f64, bool)> {
    cfg.validate()?;
    if op.dim() < 2 {
        return Err(Error::InvalidParameter("need dimension >= 2".into()));
    }
    let first = lanczos(op, &[], Want::Largest, cfg)?;
    let mut v = first.max_vec.clone();
    normalize(&mut v);
    let second_cfg = SpectralConfig { seed: cfg.seed.child(2), ..*cfg };
    let second = lanczos(op, &[v], Want::Largest, &second_cfg)?;
    Ok((first.max, second.max, first.converged && second.converged))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    /// Column-by-column sum over the support edges.
    ExactSmall,
    /// Random-sign probes.
    Stochastic { probes: usize, seed: SeedSpec },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceMoment {
    pub value: f64,
    /// Standard error of the stochastic estimate (zero for exact).
    pub std_error: f64,
}

/// `||B_full v||^2` where `v` lives on the support edges and `B_full` is the
/// `n^2`-dimensional operator; computed in `O(n + m)`.
fn full_step_norm_sq<T: Scalar>(op: &NbOperator, w: &[T], v: &[T]) -> f64 {
    let idx = op.index();
    let n = idx.n();
    let mut total = 0.0;
    for j in 0..n {
        let range = idx.out_edges(j);
        let mut s = T::zero();
        for f in range.clone() {
            s += w[f] * v[f];
        }
        let s2 = s.abs_sqr();
        let mut acc = n as f64 * s2;
        for f in range {
            // Row (i, j) with (j, i) = f in the support.
            let c = w[f] * v[f];
            acc += (s - c).abs_sqr() - s2;
        }
        total += acc;
    }
    total
}

fn trace_generic<T: Scalar>(op: &NbOperator, ell: usize, mode: TraceMode) -> Result<TraceMoment> {
    let r = op.restricted();
    let m = r.dim();
    let w: Vec<T> = r.h().iter().map(|(_, _, v)| T::from_complex(v)).collect();
    let mut x = vec![T::zero(); m];
    let mut y = vec![T::zero(); m];
    let run = |x: &mut Vec<T>, y: &mut Vec<T>| -> f64 {
        for _ in 1..ell {
            LinearOp::apply(&r, x, y);
            core::mem::swap(x, y);
        }
        full_step_norm_sq(&r, &w, x)
    };
    match mode {
        TraceMode::ExactSmall => {
            if m > EXACT_TRACE_LIMIT {
                return Err(Error::SizeGuard { what: "exact trace moment", size: m as u128, limit: EXACT_TRACE_LIMIT as u128 });
            }
            let mut total = 0.0;
            for f in 0..m {
                x.iter_mut().for_each(|v| *v = T::zero());
                x[f] = T::one();
                total += run(&mut x, &mut y);
            }
            Ok(TraceMoment { value: total, std_error: 0.0 })
        }
        TraceMode::Stochastic { probes, seed } => {
            if probes == 0 {
                return Err(Error::InvalidParameter("at least one probe required".into()));
            }
            let mut rng = seed.rng();
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..probes {
                for v in x.iter_mut() {
                    *v = if rng.random::<bool>() { T::one() } else { -T::one() };
                }
                let t = run(&mut x, &mut y);
                s1 += t;
                s2 += t * t;
            }
            let p = probes as f64;
            let mean = s1 / p;
            let var = if probes > 1 { ((s2 - p * mean * mean) / (p - 1.0)).max(0.0) } else { 0.0 };
            Ok(TraceMoment { value: mean, std_error: (var / p).sqrt() })
        }
    }
}

/// `tr B^l B^{*l}` for the `n^2`-dimensional nonbacktracking matrix (equivalently
/// `||B^l||_F^2`).
pub fn trace_moment(op: &NbOperator, ell: usize, mode: TraceMode) -> Result<TraceMoment> {
    if ell == 0 {
        return Err(Error::InvalidParameter("trace moment needs l >= 1".into()));
    }
    if op.h().is_real() {
        trace_generic::<f64>(op, ell, mode)
    } else {
        trace_generic::<C64>(op, ell, mode)
    }
}

/// Combined spectral summary of a Hermitian `H` and its `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub rho_b: f64,
    pub max_real_eig_b: Option<f64>,
    pub opnorm_h: f64,
    pub lambda_max_h: f64,
    pub lambda_min_h: f64,
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
}

pub fn spectral_report(h: &SparseMatrix, cfg: &SpectralConfig) -> Result<SpectralReport> {
    let op = build_nb_operator(h, NbMode::SupportRestricted)?;
    let radius = spectral_radius(&op, cfg)?;
    let ext = hermitian_extremes(h, cfg)?;
    let max_real = if op.dim() <= cfg.dense_cutoff_b { max_real_eigenvalue(&op, 1e-8)? } else { None };
    Ok(SpectralReport {
        rho_b: radius.rho,
        max_real_eig_b: max_real,
        opnorm_h: ext.opnorm,
        lambda_max_h: ext.lambda_max,
        lambda_min_h: ext.lambda_min,
        method: radius.method,
        converged: radius.converged && ext.converged,
        iterations: radius.iterations + ext.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn complete(n: usize) -> SparseMatrix {
        let e: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        SparseMatrix::from_edges(n, &e, 1.0).unwrap()
    }

    #[test]
    fn regular_graphs_dense_and_iterative() {
        for (h, rho) in [(complete(3), 1.0), (complete(4), 2.0), (complete(5), 3.0)] {
            let op = build_nb_operator(&h, NbMode::SupportRestricted).unwrap();
            let d = spectral_radius(&op, &SpectralConfig::default().with_solver(Solver::Dense)).unwrap();
            assert_relative_eq!(d.rho, rho, epsilon = 1e-8);
            let it = spectral_radius(&op, &SpectralConfig::default().with_solver(Solver::Iterative)).unwrap();
            assert!(it.converged);
            assert_relative_eq!(it.rho, rho, epsilon = 1e-6);
        }
    }

    #[test]
    fn triangle_spectrum_and_zero_operator() {
        let op = build_nb_operator(&complete(3), NbMode::SupportRestricted).unwrap();
        let ev = dense_spectrum(&nb_dense(&op).unwrap()).unwrap();
        for z in &ev {
            assert!((z.powu(3) - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
        let ones = ev.iter().filter(|z| (*z - C64::new(1.0, 0.0)).norm() < 1e-8).count();
        assert_eq!(ones, 2);
        assert_relative_eq!(max_real_eigenvalue(&op, 1e-8).unwrap().unwrap(), 1.0, epsilon = 1e-12);

        let h = SparseMatrix::from_edges(2, &[(0, 1)], 1.0).unwrap();
        let op = build_nb_operator(&h, NbMode::SupportRestricted).unwrap();
        assert_eq!(spectral_radius(&op, &SpectralConfig::default()).unwrap().rho, 0.0);
        let it = spectral_radius(&op, &SpectralConfig::default().with_solver(Solver::Iterative)).unwrap();
        assert_eq!(it.rho, 0.0);
        assert_eq!(max_real_eigenvalue(&op, 1e-8).unwrap(), Some(0.0));
    }

    #[test]
    fn k4_radius_matches_ihara_factorisation() {
        // Adjacency eigenvalues 3, -1, -1, -1: lambda^2 - mu lambda + 2 = 0 gives
        // {1, 2} and |lambda| = sqrt(2); the remaining m - 2n eigenvalues are ±1.
        let op = build_nb_operator(&complete(4), NbMode::SupportRestricted).unwrap();
        let ev = dense_spectrum(&nb_dense(&op).unwrap()).unwrap();
        let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_relative_eq!(rho, 2.0, epsilon = 1e-10);
        assert_relative_eq!(max_real_eigenvalue(&op, 1e-8).unwrap().unwrap(), 2.0, epsilon = 1e-10);
        let sqrt2 = ev.iter().filter(|z| (z.norm() - 2f64.sqrt()).abs() < 1e-8).count();
        assert_eq!(sqrt2, 6);
    }

    #[test]
    fn hermitian_extremes_small() {
        let h = SparseMatrix::from_edges(2, &[(0, 1)], 1.0).unwrap();
        let e = hermitian_extremes(&h, &SpectralConfig::default()).unwrap();
        assert_relative_eq!(e.lambda_max, 1.0, epsilon = 1e-14);
        assert_relative_eq!(e.lambda_min, -1.0, epsilon = 1e-14);
        assert_relative_eq!(e.opnorm, 1.0, epsilon = 1e-14);
        let s = 0.5f64.sqrt();
        let t = complete(3).scaled(s);
        let e = hermitian_extremes(&t, &SpectralConfig::default()).unwrap();
        assert_relative_eq!(e.lambda_max, 2.0 * s, epsilon = 1e-14);
        assert_relative_eq!(e.lambda_min, -s, epsilon = 1e-14);
        let it = hermitian_extremes(&t, &SpectralConfig::default().with_solver(Solver::Iterative)).unwrap();
        assert!(it.converged);
        assert_relative_eq!(it.lambda_max, 2.0 * s, epsilon = 1e-10);
        assert_relative_eq!(it.lambda_min, -s, epsilon = 1e-10);
        let directed = SparseMatrix::from_real_triplets(2, [(0, 1, 1.0)], false).unwrap();
        assert!(hermitian_extremes(&directed, &SpectralConfig::default()).is_err());
    }

    #[test]
    fn top_two_with_multiplicity() {
        // Two disjoint triangles: adjacency eigenvalue 2 has multiplicity 2.
        let h = SparseMatrix::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], 1.0).unwrap();
        let (a, b, ok) = top_two_eigenvalues(&h, &SpectralConfig::default()).unwrap();
        assert!(ok);
        assert_relative_eq!(a, 2.0, epsilon = 1e-9);
        assert_relative_eq!(b, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn trace_moment_triangle_is_six() {
        let t = complete(3).scaled(0.5f64.sqrt());
        let op = build_nb_operator(&t, NbMode::SupportRestricted).unwrap();
        let tm = trace_moment(&op, 1, TraceMode::ExactSmall).unwrap();
        assert_relative_eq!(tm.value, 6.0, epsilon = 1e-12);
        let zero = build_nb_operator(&SparseMatrix::from_edges(2, &[(0, 1)], 1.0).unwrap(), NbMode::SupportRestricted).unwrap();
        for ell in 1..4 {
            // A single edge gives B_full with nonzero entries only at l = 1.
            let v = trace_moment(&zero, ell, TraceMode::ExactSmall).unwrap().value;
            if ell == 1 {
                assert!(v > 0.0);
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn trace_moment_matches_dense_full_mode() {
        let h = SparseMatrix::from_real_triplets(
            4,
            [(0, 1, 0.5), (1, 0, 0.5), (1, 2, -1.0), (2, 1, -1.0), (2, 3, 2.0), (3, 2, 2.0), (0, 3, 0.25), (3, 0, 0.25), (0, 2, 0.7), (2, 0, 0.7)],
            true,
        )
        .unwrap();
        let full = build_nb_operator(&h, NbMode::Full).unwrap();
        let b = nb_dense(&full).unwrap();
        let op = build_nb_operator(&h, NbMode::SupportRestricted).unwrap();
        let mut p = b.clone();
        for ell in 1..=4 {
            if ell > 1 {
                p = p.matmul(&b).unwrap();
            }
            let dense = p.frobenius_norm().powi(2);
            let exact = trace_moment(&op, ell, TraceMode::ExactSmall).unwrap().value;
            assert_relative_eq!(exact, dense, max_relative = 1e-12);
            let st = trace_moment(&op, ell, TraceMode::Stochastic { probes: 4000, seed: SeedSpec::new(1, ell as u64) }).unwrap();
            assert!((st.value - exact).abs() < 5.0 * st.std_error + 1e-9, "{} vs {} ± {}", st.value, exact, st.std_error);
        }
    }
}
