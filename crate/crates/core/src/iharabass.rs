//! The λ-parametrised matrices `H(λ)`, `M(λ)` whose determinant vanishes exactly on
//! the spectrum of `B`, eigenvector recovery, the positive-semidefinite bound on `H`,
//! and the deterministic `||H||` versus `rho(B)` bounds.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use num_complex::Complex;
use twofloat::TwoFloat;

use crate::dense::{self, DenseMatrix, LogDet, Lu};
use crate::model::{EntryNorms, SparseMatrix};
use crate::nbop::{build_nb_operator, NbMode};
use crate::spectra::{self, max_real_eigenvalue};
use crate::{Error, Result, C64};

/// Largest move of a polished root, relative to `1 + |λ|`.
pub const POLISH_SHIFT: f64 = 1e-9;

/// Default guard band for `|λ² − H_ij H_ji|`.
pub const GUARD_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMatrices {
    pub h_lam: DenseMatrix<C64>,
    pub m_lam: Vec<C64>,
    pub lambda: C64,
    /// `min |λ² − H_ij H_ji|` over all pairs (off-support pairs contribute `|λ²|`).
    pub guard: f64,
}

impl LambdaMatrices {
    /// `M(λ) − H(λ)`.
    pub fn difference(&self) -> DenseMatrix<C64> {
        let mut d = self.h_lam.map(|z: C64| -z);
        for (i, &m) in self.m_lam.iter().enumerate() {
            d[(i, i)] += m;
        }
        d
    }
}

/// Smallest `|λ² − H_ij H_ji|` and the pair attaining it.
pub fn guard_value(h: &SparseMatrix, lambda: C64) -> (f64, (usize, usize)) {
    let l2 = lambda * lambda;
    let n = h.n();
    let mut best = (f64::INFINITY, (0, 0));
    if n > 0 && h.nnz() < n * n {
        // Some pair has H_ij H_ji = 0; report the first such pair.
        let pair = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| h.get(i, j) * h.get(j, i) == C64::new(0.0, 0.0))
            .unwrap_or((0, 0));
        best = (l2.norm(), pair);
    }
    for (i, j, v) in h.iter() {
        let g = (l2 - v * h.get(j, i)).norm();
        if g < best.0 {
            best = (g, (i, j));
        }
    }
    best
}

pub fn lambda_matrices(h: &SparseMatrix, lambda: C64) -> Result<LambdaMatrices> {
    lambda_matrices_guarded(h, lambda, GUARD_EPS)
}

pub fn lambda_matrices_guarded(h: &SparseMatrix, lambda: C64, eps: f64) -> Result<LambdaMatrices> {
    let (guard, (row, col)) = guard_value(h, lambda);
    if guard <= eps {
        return Err(Error::GuardViolation { row, col, value: guard });
    }
    let n = h.n();
    let l2 = lambda * lambda;
    let mut h_lam = DenseMatrix::zeros(n, n);
    let mut m_lam = vec![C64::new(1.0, 0.0); n];
    for (i, j, v) in h.iter() {
        let p = v * h.get(j, i);
        let den = l2 - p;
        h_lam[(i, j)] = lambda * v / den;
        m_lam[i] += p / den;
    }
    Ok(LambdaMatrices { h_lam, m_lam, lambda, guard: if guard.is_finite() { guard } else { l2.norm() } })
}

/// `det(M(λ) − H(λ))` in log-magnitude and phase form.
pub fn ib_determinant(h: &SparseMatrix, lambda: C64) -> Result<LogDet> {
    lambda_matrices(h, lambda)?.difference().log_det()
}

/// `M(λ) − H(λ)` at `λ = hi + lo` (a two-term sum carrying extra precision) together
/// with its derivative at `hi`. The `lo` part enters to first order.
fn difference_extended(h: &SparseMatrix, hi: C64, lo: C64) -> Result<(DenseMatrix<C64>, DenseMatrix<C64>)> {
    let (guard, (row, col)) = guard_value(h, hi);
    if guard <= GUARD_EPS {
        return Err(Error::GuardViolation { row, col, value: guard });
    }
    let n = h.n();
    let l2 = hi * hi;
    let mut k = DenseMatrix::zeros(n, n);
    let mut dk = DenseMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = C64::new(1.0, 0.0);
    }
    for (i, j, v) in h.iter() {
        let p = v * h.get(j, i);
        let den = l2 - p;
        let d_h = -v * (l2 + p) / (den * den);
        let d_m = -(hi * p * 2.0) / (den * den);
        k[(i, j)] -= hi * v / den + d_h * lo;
        dk[(i, j)] -= d_h;
        k[(i, i)] += p / den + d_m * lo;
        dk[(i, i)] += d_m;
    }
    Ok((k, dk))
}

/// `tr(K^{-1} K')` from a factorisation of `K`.
fn trace_solve(lu: &Lu<C64>, dk: &DenseMatrix<C64>) -> Result<C64> {
    let n = dk.rows();
    let mut tr = C64::new(0.0, 0.0);
    for c in 0..n {
        let col: Vec<C64> = (0..n).map(|r| dk[(r, c)]).collect();
        tr += lu.solve(&col)?[c];
    }
    Ok(tr)
}

/// `d/dλ log det(M(λ) − H(λ))`, or `None` where `K` is exactly singular or the guard fails.
fn log_derivative(h: &SparseMatrix, x: C64) -> Option<C64> {
    let (k, dk) = difference_extended(h, x, C64::new(0.0, 0.0)).ok()?;
    trace_solve(&k.lu().ok()?, &dk).ok()
}

/// A zero of `det(M(λ) − H(λ))` refined by Newton steps in extended precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolishedRoot {
    /// Leading part of the refined root.
    pub hi: C64,
    /// Trailing correction, `|lo| <= ulp(hi)`.
    pub lo: C64,
    /// `|det|` at the refined root relative to `|det|` at `root + 0.5`.
    pub ratio: f64,
}

type Dd = Complex<TwoFloat>;

fn dd(z: C64) -> Dd {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

/// Real double-double quotient with one correction step (the library quotient loses
/// the low word).
fn dd_quot(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q = TwoFloat::from(a.hi() / b.hi());
    let r = a - q * b;
    let q = q + TwoFloat::from(r.hi() / b.hi());
    let r = a - q * b;
    q + TwoFloat::from(r.hi() / b.hi())
}

fn dd_div(z: Dd, w: Dd) -> Dd {
    let den = w.norm_sqr();
    let num = z * w.conj();
    Complex::new(dd_quot(num.re, den), dd_quot(num.im, den))
}

/// `det(M(λ) − H(λ))` at `λ = hi + lo`, assembled and factorised in double-double
/// arithmetic so that the residual at a polished root is not set by f64 rounding of `K`.
pub fn det_extended(h: &SparseMatrix, hi: C64, lo: C64) -> Result<LogDet> {
    let (guard, (row, col)) = guard_value(h, hi);
    if guard <= GUARD_EPS {
        return Err(Error::GuardViolation { row, col, value: guard });
    }
    let n = h.n();
    let zero = dd(C64::new(0.0, 0.0));
    let lam = dd(hi) + dd(lo);
    let l2 = lam * lam;
    let mut a = vec![zero; n * n];
    for i in 0..n {
        a[i * n + i] = dd(C64::new(1.0, 0.0));
    }
    for (i, j, v) in h.iter() {
        let v = dd(v);
        let p = v * dd(h.get(j, i));
        let den = l2 - p;
        a[i * n + j] -= dd_div(lam * v, den);
        a[i * n + i] += dd_div(p, den);
    }
    let mut log_abs = 0.0;
    let mut phase = C64::new(1.0, 0.0);
    for k in 0..n {
        let (p, best) = (k..n)
            .map(|i| (i, a[i * n + k].norm_sqr().hi()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == 0.0 {
            return Ok(LogDet { log_abs: f64::NEG_INFINITY, phase: C64::new(0.0, 0.0) });
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            phase = -phase;
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let l = dd_div(a[i * n + k], pivot);
            for j in k + 1..n {
                a[i * n + j] = a[i * n + j] - l * a[k * n + j];
            }
        }
        log_abs += 0.5 * best.ln();
        phase *= C64::new(pivot.re.hi(), pivot.im.hi()) / best.sqrt();
    }
    Ok(LogDet { log_abs, phase })
}

/// Two-sum renormalisation of `hi + (lo + step)`.
fn advance(hi: C64, lo: C64, step: C64) -> (C64, C64) {
    let t = lo + step;
    let sum = hi + t;
    (sum, t - (sum - hi))
}

/// Newton iteration `λ ← λ − 1 / tr(K(λ)^{-1} K'(λ))` started at `start`, followed by
/// secant steps on the double-double determinant. The iterate is kept as a two-term
/// sum so the final residual is not limited by rounding `λ` to one `f64`.
pub fn polish_root(h: &SparseMatrix, start: C64, steps: usize) -> Result<PolishedRoot> {
    let zero = C64::new(0.0, 0.0);
    let (mut hi, mut lo) = (start, zero);
    let mut best = (hi, lo, det_extended(h, hi, lo)?);
    for _ in 0..steps {
        if best.2.is_zero() {
            break;
        }
        let Ok((k, dk)) = difference_extended(h, hi, lo) else { break };
        let Ok(lu) = k.lu() else { break };
        let tr = trace_solve(&lu, &dk)?;
        if tr == zero || !(tr.re.is_finite() && tr.im.is_finite()) {
            break;
        }
        (hi, lo) = advance(hi, lo, -tr.inv());
        let Ok(d) = det_extended(h, hi, lo) else { break };
        if d.log_abs < best.2.log_abs {
            best = (hi, lo, d);
        }
    }
    // Secant refinement from the best Newton iterate and a nearby point.
    let (mut x1, mut d1) = ((best.0, best.1), best.2);
    let offset = C64::new(1e-12 * (1.0 + best.0.norm()), 0.0);
    let mut x0 = advance(x1.0, x1.1, offset);
    let mut d0 = det_extended(h, x0.0, x0.1)?;
    for _ in 0..steps {
        if d1.is_zero() || d0.is_zero() {
            break;
        }
        // d0 / d1 without leaving log form.
        let r = d0.phase / d1.phase * (d0.log_abs - d1.log_abs).exp();
        let denom = C64::new(1.0, 0.0) - r;
        let diff = (x1.0 - x0.0) + (x1.1 - x0.1);
        if denom == zero || !(r.re.is_finite() && r.im.is_finite()) {
            break;
        }
        let step = -diff / denom;
        if step == zero || !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        let x2 = advance(x1.0, x1.1, step);
        let Ok(d2) = det_extended(h, x2.0, x2.1) else { break };
        (x0, d0, x1, d1) = (x1, d1, x2, d2);
        if d1.log_abs < best.2.log_abs {
            best = (x1.0, x1.1, d1);
        }
    }
    let (hi, lo, det) = best;
    let base = det_extended(h, hi + 0.5, lo)?.log_abs;
    Ok(PolishedRoot { hi, lo, ratio: (det.log_abs - base).exp() })
}

/// Edge vector on the support of `H` (indexed like the restricted operator) built
/// from a null vector `y` of `M(λ) − H(λ)`.
pub fn recover_b_eigvec(h: &SparseMatrix, lambda: C64, y: &[C64], tol: f64) -> Result<Vec<C64>> {
    let lm = lambda_matrices(h, lambda)?;
    let n = h.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let ny = dense::norm2(y);
    if ny == 0.0 {
        return Err(Error::NotNullVector { residual: f64::INFINITY });
    }
    let k = lm.difference();
    let r = k.mul_vec(y)?;
    let residual = dense::norm2(&r) / (k.frobenius_norm().max(f64::MIN_POSITIVE) * ny);
    if residual > tol {
        return Err(Error::NotNullVector { residual });
    }
    let l2 = lambda * lambda;
    // Edge e = (j, i): x_e = (λ y_i − H_ij y_j) / (λ² − H_ij H_ji).
    Ok(h
        .iter()
        .map(|(j, i, hji)| {
            let hij = h.get(i, j);
            (lambda * y[i] - hij * y[j]) / (l2 - hij * hji)
        })
        .collect())
}

/// `f(x) = 2` on `[0, 1]` and `x + 1/x` beyond.
pub fn f_profile(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("f is defined on [0, inf), got {x}")));
    }
    Ok(if x <= 1.0 { 2.0 } else { x + 1.0 / x })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub rho_b: f64,
    pub norm2inf: f64,
    pub norm1inf: f64,
    pub f_value: f64,
    /// `s f(rho/s) + 7 ||H||_{1->inf}` with `s = ||H||_{2->inf}`.
    pub thm_bound: f64,
    /// `2 s + (rho − s)_+^2 / s + 7 ||H||_{1->inf}`.
    pub cor_bound: f64,
    /// `s (f(λ1) + 6 δ)` with `δ = ||H||_{1->inf} / s` and `λ1 = max(1 + √δ, rho / s)`;
    /// only defined for `δ <= 1`.
    pub proof_bound: Option<f64>,
    pub opnorm: f64,
    pub thm_satisfied: bool,
    pub cor_satisfied: bool,
}

impl BoundReport {
    pub fn thm_slack(&self) -> f64 {
        self.thm_bound - self.opnorm
    }

    pub fn cor_slack(&self) -> f64 {
        self.cor_bound - self.opnorm
    }
}

/// Both norm bounds from precomputed ingredients.
pub fn bound_report(norm2inf: f64, norm1inf: f64, rho_b: f64, opnorm: f64) -> BoundReport {
    const SLACK: f64 = 1e-8;
    let s = norm2inf;
    if s <= 0.0 {
        return BoundReport {
            rho_b,
            norm2inf,
            norm1inf,
            f_value: 2.0,
            thm_bound: 0.0,
            cor_bound: 0.0,
            proof_bound: Some(0.0),
            opnorm,
            thm_satisfied: opnorm <= SLACK,
            cor_satisfied: opnorm <= SLACK,
        };
    }
    let f_value = f_profile(rho_b / s).unwrap_or(f64::NAN);
    let thm_bound = s * f_value + 7.0 * norm1inf;
    let excess = (rho_b - s).max(0.0);
    let cor_bound = 2.0 * s + excess * excess / s + 7.0 * norm1inf;
    let delta = norm1inf / s;
    let proof_bound = (delta <= 1.0).then(|| {
        let l1 = (1.0 + delta.sqrt()).max(rho_b / s);
        s * (l1 + 1.0 / l1 + 6.0 * delta)
    });
    BoundReport {
        rho_b,
        norm2inf,
        norm1inf,
        f_value,
        thm_bound,
        cor_bound,
        proof_bound,
        opnorm,
        thm_satisfied: thm_bound - opnorm >= -SLACK,
        cor_satisfied: cor_bound - opnorm >= -SLACK,
    }
}

/// Norm bounds for `H` given `rho(B)` and `||H||`.
pub fn norm_bound<M: EntryNorms + ?Sized>(h: &M, rho_b: f64, opnorm: f64) -> BoundReport {
    bound_report(h.norm_2_to_inf(), h.norm_1_to_inf(), rho_b, opnorm)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Hypothesis(format!("delta = {delta} outside [0, 1]")));
    }
    Ok(())
}

/// `max(1 + √δ, max(σ(B) ∩ R))` via the dense path.
pub fn lambda0(h: &SparseMatrix, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let op = build_nb_operator(h, NbMode::SupportRestricted)?;
    let base = 1.0 + delta.sqrt();
    Ok(match max_real_eigenvalue(&op, 1e-8)? {
        Some(r) => base.max(r),
        None => base,
    })
}

/// Smallest eigenvalue of `(λ0 + 1/λ0 + 6δ) I − H`, after checking
/// `max |H_ij| <= δ` and `max_i Σ_j |H_ij|² <= 1 + δ`.
pub fn psd_gap(h: &SparseMatrix, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !h.is_hermitian() {
        return Err(Error::Hypothesis("H is not Hermitian".into()));
    }
    let tol = 1e-12;
    let mut failed: Vec<String> = Vec::new();
    let n1 = h.norm_1_to_inf();
    if n1 > delta + tol {
        failed.push(format!("max |H_ij| = {n1} > delta = {delta}"));
    }
    let rows = h.row_sq_sums().into_iter().fold(0.0, f64::max);
    if rows > 1.0 + delta + tol {
        failed.push(format!("max row sum of squares = {rows} > 1 + delta = {}", 1.0 + delta));
    }
    if !failed.is_empty() {
        return Err(Error::Hypothesis(failed.join("; ")));
    }
    let l0 = lambda0(h, delta)?;
    let top = if h.n() == 0 {
        0.0
    } else if h.is_real() {
        dense::hermitian_eigenvalues(&h.to_dense().real_part())?.last().copied().unwrap_or(0.0)
    } else {
        dense::hermitian_eigenvalues(&h.to_dense())?.last().copied().unwrap_or(0.0)
    };
    Ok(l0 + 1.0 / l0 + 6.0 * delta - top)
}

/// Real zeros of `λ ↦ det(M(λ) − H(λ))` on `[lo, hi]` for Hermitian `H`.
///
/// On the real line the determinant is real. The interval is cut at the poles
/// `±|H_ij|` and at 0, each piece is scanned on a grid, sign changes are bisected
/// and interior minima of `|det|` are refined by golden-section search (to catch
/// roots of even multiplicity). Candidates are kept when `|det|` is below
/// `rel_tol` times its value at `λ + 0.5`.
pub fn real_roots(h: &SparseMatrix, lo: f64, hi: f64, grid: usize, rel_tol: f64) -> Result<Vec<f64>> {
    if !h.is_hermitian() {
        return Err(Error::InvalidParameter("real root search needs a Hermitian matrix".into()));
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
    }
    let mut singular: Vec<f64> = vec![0.0];
    for (i, j, v) in h.iter() {
        let p = (v * h.get(j, i)).re.max(0.0).sqrt();
        singular.push(p);
        singular.push(-p);
    }
    let mut cuts = singular.clone();
    cuts.extend([lo, hi]);
    cuts.retain(|&c| c >= lo && c <= hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let eval = |x: f64| -> Option<LogDet> { ib_determinant(h, C64::new(x, 0.0)).ok() };
    let signed = |d: &LogDet| -> f64 {
        if d.is_zero() {
            0.0
        } else {
            d.phase.re.signum()
        }
    };
    // Near a zero or pole of order k at a singular point c, the logarithmic derivative
    // is about k / (x − c); at a genuine root it is of order 1 / |x − root| instead.
    let order_bound = 4.0 * h.n() as f64 + 4.0;
    let near_singular = |x: f64| -> bool {
        let dist = singular.iter().map(|c| (x - c).abs()).fold(f64::INFINITY, f64::min);
        log_derivative(h, C64::new(x, 0.0)).is_some_and(|g| g.norm() * dist <= order_bound)
    };
    let accept = |x: f64| -> bool {
        if near_singular(x) {
            return false;
        }
        match (eval(x), eval(x + 0.5)) {
            (Some(a), Some(b)) if a.is_zero() || a.log_abs - b.log_abs <= rel_tol.ln() => true,
            (Some(_), Some(_)) => polish_root(h, C64::new(x, 0.0), 8)
                .is_ok_and(|p| p.ratio <= rel_tol && (p.hi.re - x).abs() <= POLISH_SHIFT * (1.0 + x.abs())),
            _ => false,
        }
    };

    let mut roots: Vec<f64> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let width = b - a;
        if width <= 1e-9 {
            continue;
        }
        let pad = width * 1e-9 + 1e-11;
        let (a, b) = (a + pad, b - pad);
        // Uniform grid plus points clustered geometrically at both ends, where a zero
        // can sit very close to a pole.
        let mut xs: Vec<f64> = (0..=grid).map(|k| a + (b - a) * k as f64 / grid as f64).collect();
        for e in 1..=12 {
            let off = (b - a) * 10f64.powi(-e) * 0.5;
            xs.push(a + off);
            xs.push(b - off);
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let grid = xs.len() - 1;
        let ds: Vec<Option<LogDet>> = xs.iter().map(|&x| eval(x)).collect();
        for k in 0..grid {
            let (Some(d0), Some(d1)) = (&ds[k], &ds[k + 1]) else { continue };
            let (s0, s1) = (signed(d0), signed(d1));
            if s0 == 0.0 {
                roots.push(xs[k]);
            } else if s0 != s1 && s1 != 0.0 {
                let (mut l, mut r) = (xs[k], xs[k + 1]);
                for _ in 0..200 {
                    let mid = 0.5 * (l + r);
                    if mid <= l || mid >= r {
                        break;
                    }
                    match eval(mid) {
                        Some(dm) if signed(&dm) == s0 => l = mid,
                        Some(_) => r = mid,
                        None => break,
                    }
                }
                roots.push(0.5 * (l + r));
            }
        }
        // Interior local minima of log|det|.
        for k in 1..grid {
            let (Some(dl), Some(dm), Some(dr)) = (&ds[k - 1], &ds[k], &ds[k + 1]) else { continue };
            if dm.log_abs < dl.log_abs && dm.log_abs <= dr.log_abs && signed(dl) == signed(dr) {
                let g = golden_min(|x| eval(x).map_or(f64::INFINITY, |d| d.log_abs), xs[k - 1], xs[k + 1]);
                roots.push(g);
            }
        }
    }
    roots.retain(|&x| accept(x));
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
    Ok(roots)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Outcome of checking the determinant identity on one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// Eigenvalues of `B` outside the guard band.
    pub checked: usize,
    /// Eigenvalues skipped because of the guard band.
    pub skipped: usize,
    /// Eigenvalues where `|det|` failed the relative test.
    pub forward_failures: Vec<C64>,
    /// Real eigenvalues of `B` (outside the guard band) with no root within `root_tol`.
    pub missed_real: Vec<f64>,
    /// Roots with no eigenvalue of `B` within `root_tol`.
    pub spurious_roots: Vec<f64>,
    pub worst_ratio: f64,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.forward_failures.is_empty() && self.missed_real.is_empty() && self.spurious_roots.is_empty()
    }
}

/// Both directions of the determinant identity for a Hermitian `H`: every guarded
/// eigenvalue of dense `B` is a zero (relative to `λ + 0.5`), and the real zeros
/// found by [`real_roots`] are exactly the guarded real eigenvalues.
pub fn check_equivalence(h: &SparseMatrix, rel_tol: f64, root_tol: f64) -> Result<EquivalenceReport> {
    let op = build_nb_operator(h, NbMode::SupportRestricted)?;
    let ev = if op.dim() == 0 { Vec::new() } else { spectra::dense_spectrum(&crate::nbop::nb_dense(&op)?)? };
    let mut rep = EquivalenceReport {
        checked: 0,
        skipped: 0,
        forward_failures: Vec::new(),
        missed_real: Vec::new(),
        spurious_roots: Vec::new(),
        worst_ratio: 0.0,
    };
    let guard_ok = |z: C64| guard_value(h, z).0 > 1e-6;
    let mut real_eigs = Vec::new();
    for &z in &ev {
        if !guard_ok(z) {
            rep.skipped += 1;
            continue;
        }
        rep.checked += 1;
        let d0 = ib_determinant(h, z)?;
        let d1 = ib_determinant(h, z + 0.5)?;
        let mut ratio = if d0.is_zero() { 0.0 } else { (d0.log_abs - d1.log_abs).exp() };
        if ratio > rel_tol {
            // Rounding `λ` to one f64 can leave a residual above the tolerance when
            // the determinant is steep; polishing stays within the same root.
            if let Ok(p) = polish_root(h, z, 8) {
                if (p.hi - z).norm() <= POLISH_SHIFT * (1.0 + z.norm()) {
                    ratio = ratio.min(p.ratio);
                }
            }
        }
        rep.worst_ratio = rep.worst_ratio.max(ratio);
        if ratio > rel_tol {
            rep.forward_failures.push(z);
        }
        if z.im.abs() <= 1e-9 * (1.0 + z.norm()) {
            real_eigs.push(z.re);
        }
    }
    let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let span = rho + 1.0;
    let roots = real_roots(h, -span, span, 400, rel_tol)?;
    for &r in &real_eigs {
        if !roots.iter().any(|&x| (x - r).abs() <= root_tol) {
            rep.missed_real.push(r);
        }
    }
    for &x in &roots {
        if !ev.iter().any(|z| (z - C64::new(x, 0.0)).norm() <= root_tol.sqrt()) {
            rep.spurious_roots.push(x);
        }
    }
    Ok(rep)
}
