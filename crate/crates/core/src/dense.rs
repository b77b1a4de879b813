//! Dense reference linear algebra.
//!
//! Everything here is eigenvalue-only and sized for validation work (a few thousand
//! rows at most): LU with partial pivoting, Householder reductions to Hessenberg and
//! tridiagonal form, the Francis double-shift QR for real matrices, a single-shift
//! complex QR, and the implicit QL iteration for symmetric tridiagonal matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result, Scalar};

const EPS: f64 = f64::EPSILON;
/// Relative floor (in units of the matrix norm) for the local scale in QR deflation.
const DEFLATE_FLOOR: f64 = f64::EPSILON;
/// Multipliers for exceptional QR shifts.
const EXCEPTIONAL: [f64; 4] = [0.75, -0.6, 1.1, -0.35];

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: x.len() });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i).iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn to_complex(&self) -> DenseMatrix<C64> {
        self.map(Scalar::to_complex)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..=i).all(|j| (self[(i, j)] - self[(j, i)].conj()).abs() <= tol)
            })
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn lu(&self) -> Result<Lu<T>> {
        Lu::factor(self)
    }

    pub fn log_det(&self) -> Result<LogDet> {
        Ok(self.lu()?.log_det())
    }
}

impl DenseMatrix<C64> {
    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn real_part(&self) -> DenseMatrix<f64> {
        self.map(|z: C64| z.re)
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Determinant in log-magnitude / phase form: `det = exp(log_abs) * phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    /// Unit-modulus phase, or zero for a singular matrix.
    pub phase: C64,
}

impl LogDet {
    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    pub fn value(&self) -> C64 {
        if self.is_zero() {
            C64::new(0.0, 0.0)
        } else {
            self.phase * self.log_abs.exp()
        }
    }
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    parity: f64,
    norm: f64,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows, got: a.cols });
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1.0;
        let norm = a.data.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 {
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                parity = -parity;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let l = lu[i * n + k] / pivot;
                lu[i * n + k] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= l * u;
                }
            }
        }
        Ok(Self { n, lu, perm, parity, norm })
    }

    pub fn log_det(&self) -> LogDet {
        let n = self.n;
        let mut log_abs = 0.0;
        let mut phase = C64::new(self.parity, 0.0);
        for k in 0..n {
            let u = self.lu[k * n + k];
            let a = u.abs();
            if a == 0.0 {
                return LogDet { log_abs: f64::NEG_INFINITY, phase: C64::new(0.0, 0.0) };
            }
            log_abs += a.ln();
            phase *= u.to_complex() / a;
        }
        LogDet { log_abs, phase }
    }

    /// Solves `A x = b`; exactly zero pivots are replaced by `eps * ||A||` so that the
    /// solve doubles as an inverse-iteration step on a singular matrix.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        let floor = (EPS * self.norm).max(f64::MIN_POSITIVE);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            let mut d = self.lu[i * n + i];
            if d.abs() < floor {
                d = T::from_real(floor);
            }
            x[i] = s / d;
        }
        Ok(x)
    }
}

/// Euclidean norm.
pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.abs_sqr()).sum::<f64>().sqrt()
}

/// Approximate null vector of a (nearly) singular square matrix by inverse iteration.
/// Returns the unit vector and its relative residual `||K y|| / ||K||_F`.
pub fn null_vector<T: Scalar>(k: &DenseMatrix<T>) -> Result<(Vec<T>, f64)> {
    let lu = k.lu()?;
    let n = k.rows;
    let mut y: Vec<T> = (0..n).map(|i| T::from_real(1.0 + 1.0 / (i as f64 + 2.0))).collect();
    for _ in 0..4 {
        let z = lu.solve(&y)?;
        let nz = norm2(&z);
        if nz == 0.0 || !nz.is_finite() {
            break;
        }
        y = z.into_iter().map(|v| v.scale(1.0 / nz)).collect();
    }
    let r = k.mul_vec(&y)?;
    let scale = k.frobenius_norm().max(f64::MIN_POSITIVE);
    Ok((y, norm2(&r) / scale))
}

/// Scales rows and columns by powers of two to equalise their norms (similarity
/// transform, eigenvalues unchanged).
fn balance<T: Scalar>(a: &mut DenseMatrix<T>) {
    const RADIX: f64 = 2.0;
    let n = a.rows;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs1();
                    r += a[(i, j)].abs1();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] = a[(i, j)].scale(ginv);
                    a[(j, i)] = a[(j, i)].scale(f);
                }
            }
        }
    }
}

/// Householder vector `u` with `||u||^2 = 2` such that `(I - u u^*) x = -phase(x0) ||x|| e_1`.
fn householder<T: Scalar>(x: &[T]) -> Option<Vec<T>> {
    let alpha = norm2(x);
    if alpha == 0.0 || x[1..].iter().all(|v| v.abs() == 0.0) {
        return None;
    }
    let mut v = x.to_vec();
    v[0] += x[0].phase().scale(alpha);
    let nv = norm2(&v);
    let s = (2.0f64).sqrt() / nv;
    Some(v.into_iter().map(|t| t.scale(s)).collect())
}

/// Reduces `a` to upper Hessenberg form in place by unitary similarity.
pub fn hessenberg_reduce<T: Scalar>(a: &mut DenseMatrix<T>) {
    let n = a.rows;
    for k in 0..n.saturating_sub(2) {
        let x: Vec<T> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let Some(u) = householder(&x) else { continue };
        for j in k..n {
            let mut s = T::zero();
            for (t, ui) in u.iter().enumerate() {
                s += ui.conj() * a[(k + 1 + t, j)];
            }
            for (t, &ui) in u.iter().enumerate() {
                a[(k + 1 + t, j)] -= ui * s;
            }
        }
        for i in 0..n {
            let mut s = T::zero();
            for (t, &ui) in u.iter().enumerate() {
                s += a[(i, k + 1 + t)] * ui;
            }
            for (t, ui) in u.iter().enumerate() {
                a[(i, k + 1 + t)] -= s * ui.conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = T::zero();
        }
    }
}

/// Eigenvalues of a general complex matrix, dispatching to the real Francis QR when
/// every entry is real.
pub fn eigenvalues(a: &DenseMatrix<C64>) -> Result<Vec<C64>> {
    if a.is_real() {
        eigenvalues_real(&a.real_part())
    } else {
        eigenvalues_complex(a)
    }
}

/// Eigenvalues of a real general matrix (balancing, Householder Hessenberg, Francis
/// double-shift QR).
pub fn eigenvalues_real(a: &DenseMatrix<f64>) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, got: a.cols });
    }
    let n = a.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg_reduce(&mut h);
    hqr(&h)
}

/// Eigenvalues of a general complex matrix (balancing, Householder Hessenberg,
/// single-shift QR with Wilkinson shifts).
pub fn eigenvalues_complex(a: &DenseMatrix<C64>) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, got: a.cols });
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg_reduce(&mut h);
    hessenberg_eigenvalues_complex(h)
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn hqr(h: &DenseMatrix<f64>) -> Result<Vec<C64>> {
    let n = h.rows;
    // 1-based working copy keeps the classical index arithmetic readable.
    let w = n + 1;
    let mut a = vec![0.0f64; w * w];
    for i in 0..n {
        for j in 0..n {
            a[(i + 1) * w + j + 1] = h[(i, j)];
        }
    }
    macro_rules! at {
        ($i:expr, $j:expr) => {
            a[($i) * w + ($j)]
        };
    }
    let mut wr = vec![0.0f64; n + 1];
    let mut wi = vec![0.0f64; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += at!(i, j).abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let max_its = 60 * n.max(10);
    let mut total_its = 0usize;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                // Floored so that nearly nilpotent blocks still deflate.
                let s = (at!(l - 1, l - 1).abs() + at!(l, l).abs()).max(DEFLATE_FLOOR * anorm);
                if at!(l, l - 1).abs() <= EPS * s {
                    at!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = at!(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = at!(nn - 1, nn - 1);
            let mut wv = at!(nn, nn - 1) * at!(nn - 1, nn);
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + wv;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - wv / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }
            total_its += 1;
            if total_its > max_its {
                return Err(Error::NoConvergence { iterations: total_its });
            }
            if its > 0 && its % 10 == 0 {
                t += x;
                for i in 1..=nn {
                    at!(i, i) -= x;
                }
                // Exceptional shift; the factor varies so repeated stalls are broken.
                let s = at!(nn, nn - 1).abs() + at!(nn - 1, nn - 2).abs();
                let f = EXCEPTIONAL[(its / 10 - 1) % EXCEPTIONAL.len()];
                x = f * s;
                y = x;
                wv = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            let mut z;
            loop {
                z = at!(m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - wv) / at!(m + 1, m) + at!(m, m + 1);
                q = at!(m + 1, m + 1) - z - rr - ss;
                r = at!(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = at!(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (at!(m - 1, m - 1).abs() + z.abs() + at!(m + 1, m + 1).abs());
                if u <= EPS * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                at!(i, i - 2) = 0.0;
                if i != m + 2 {
                    at!(i, i - 3) = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = at!(k, k - 1);
                    q = at!(k + 1, k - 1);
                    r = 0.0;
                    if k != nn - 1 {
                        r = at!(k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            at!(k, k - 1) = -at!(k, k - 1);
                        }
                    } else {
                        at!(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = at!(k, j) + q * at!(k + 1, j);
                        if k != nn - 1 {
                            p += r * at!(k + 2, j);
                            at!(k + 2, j) -= p * z;
                        }
                        at!(k + 1, j) -= p * y;
                        at!(k, j) -= p * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        p = x * at!(i, k) + y * at!(i, k + 1);
                        if k != nn - 1 {
                            p += z * at!(i, k + 2);
                            at!(i, k + 2) -= p * r;
                        }
                        at!(i, k + 1) -= p * q;
                        at!(i, k) -= p;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((1..=n).map(|i| C64::new(wr[i], wi[i])).collect())
}

/// Plane rotation `G = [[c, s], [-conj(s), c]]` with `G [a; b] = [r; 0]`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let nrm = na.hypot(nb);
    (na / nrm, (a / na) * b.conj() / nrm)
}

/// Single-shift QR iteration on a complex upper Hessenberg matrix (eigenvalues only).
pub fn hessenberg_eigenvalues_complex(mut h: DenseMatrix<C64>) -> Result<Vec<C64>> {
    let n = h.rows;
    let mut eig = vec![C64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eig);
    }
    let anorm = h.as_slice().iter().map(|z| z.abs1()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n.max(10);
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let s = (h[(lo - 1, lo - 1)].abs1() + h[(lo, lo)].abs1()).max(DEFLATE_FLOOR * anorm);
            if h[(lo, lo - 1)].abs1() <= EPS * s {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        its += 1;
        if total > max_total {
            return Err(Error::NoConvergence { iterations: total });
        }
        let mu = if its.is_multiple_of(10) {
            let mut s = h[(hi, hi - 1)].abs1();
            if hi >= 2 {
                s += h[(hi - 1, hi - 2)].abs1();
            }
            h[(hi, hi)] + C64::new(EXCEPTIONAL[(its / 10 - 1) % EXCEPTIONAL.len()] * s, 0.0)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let m = (a + d) * 0.5;
            let (r1, r2) = (m + disc, m - disc);
            if (r1 - d).norm() <= (r2 - d).norm() {
                r1
            } else {
                r2
            }
        };
        for i in lo..=hi {
            h[(i, i)] -= mu;
        }
        rots.clear();
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rots.push((c, s));
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
        }
        for (idx, k) in (lo..hi).enumerate() {
            let (c, s) = rots[idx];
            for i in lo..=(k + 2).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
        }
        for i in lo..=hi {
            h[(i, i)] += mu;
        }
    }
    Ok(eig)
}

/// Reduces a Hermitian matrix to real symmetric tridiagonal form; returns the diagonal
/// and the (non-negative) off-diagonal.
pub fn hermitian_tridiagonalize<T: Scalar>(a: &DenseMatrix<T>) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows;
    let mut a = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<T> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let Some(u) = householder(&x) else { continue };
        let len = u.len();
        let off = k + 1;
        // p = A22 u
        let mut p = vec![T::zero(); len];
        for (i, pi) in p.iter_mut().enumerate() {
            let mut s = T::zero();
            for (j, &uj) in u.iter().enumerate() {
                s += a[(off + i, off + j)] * uj;
            }
            *pi = s;
        }
        let kk: f64 = u.iter().zip(&p).map(|(&ui, &pi)| (ui.conj() * pi).re()).sum::<f64>() * 0.5;
        let q: Vec<T> = p.iter().zip(&u).map(|(&pi, &ui)| pi - ui.scale(kk)).collect();
        for i in 0..len {
            for j in 0..len {
                let upd = q[i] * u[j].conj() + u[i] * q[j].conj();
                a[(off + i, off + j)] -= upd;
            }
        }
        // Column k below the diagonal becomes -phase(x0) ||x|| e_1.
        let alpha = norm2(&x);
        let new = -(x[0].phase().scale(alpha));
        a[(off, k)] = new;
        a[(k, off)] = new.conj();
        for i in off + 1..n {
            a[(i, k)] = T::zero();
            a[(k, i)] = T::zero();
        }
    }
    let diag = (0..n).map(|i| a[(i, i)].re()).collect();
    let off = (0..n.saturating_sub(1)).map(|i| a[(i + 1, i)].abs()).collect();
    (diag, off)
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn hermitian_eigenvalues<T: Scalar>(a: &DenseMatrix<T>) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, got: a.cols });
    }
    let (d, e) = hermitian_tridiagonalize(a);
    let (mut ev, _) = tridiagonal_eigen(&d, &e, false)?;
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
///
/// `diag` has length `n`, `off` length `n - 1`. When `last_row` is set, the second
/// return value holds the last component of each normalised eigenvector (in the
/// same order as the eigenvalues); Lanczos uses it for Ritz residuals.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], last_row: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut z = vec![0.0; if last_row { n } else { 0 }];
    if last_row && n > 0 {
        z[n - 1] = 1.0;
    }
    let d = tql(diag, off, &mut z, usize::from(last_row))?;
    Ok((d, z))
}

/// Eigenvalues and eigenvectors of a symmetric tridiagonal matrix; column `j` of the
/// returned matrix is the eigenvector for eigenvalue `j`.
pub fn tridiagonal_eigen_vectors(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, DenseMatrix<f64>)> {
    let n = diag.len();
    let mut z = DenseMatrix::<f64>::identity(n);
    let d = tql(diag, off, &mut z.data, n)?;
    Ok((d, z))
}

/// Core QL sweep. `z` holds `zrows` rows of length `n` that are rotated along with
/// the iteration.
fn tql(diag: &[f64], off: &[f64], z: &mut [f64], zrows: usize) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, got: off.len() });
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= EPS * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence { iterations: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + sign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.chunks_exact_mut(n).take(zrows) {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Eigenvector of a small square matrix for an (approximate) eigenvalue `theta`, by
/// inverse iteration.
pub fn eigenvector_for<T: Scalar>(a: &DenseMatrix<T>, theta: T) -> Result<Vec<T>> {
    let n = a.rows;
    let mut shifted = a.clone();
    let nrm = a.frobenius_norm().max(1.0);
    // Nudge the shift off the exact eigenvalue so the factorisation stays finite.
    let nudge = T::from_real(nrm * 1e-13);
    for i in 0..n {
        shifted[(i, i)] -= theta + nudge;
    }
    let (v, _) = null_vector(&shifted)?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sorted_by_re_im(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn identity_spectrum() {
        let ev = eigenvalues(&DenseMatrix::<C64>::identity(3)).unwrap();
        for z in ev {
            assert_relative_eq!(z.re, 1.0, epsilon = 1e-14);
            assert!(z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_has_conjugate_pair() {
        let m = DenseMatrix::from_row_major(2, 2, vec![0.0, -1.0, 1.0, 0.0]).unwrap();
        let ev = sorted_by_re_im(eigenvalues_real(&m).unwrap());
        assert!((ev[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - C64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn cyclic_permutation_roots_of_unity() {
        let n = 7;
        let m = DenseMatrix::<f64>::from_fn(n, n, |i, j| if j == (i + 1) % n { 1.0 } else { 0.0 });
        let ev = eigenvalues_real(&m).unwrap();
        for z in &ev {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            // z^7 = 1
            assert!((z.powu(7) - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
        let c = eigenvalues_complex(&m.to_complex()).unwrap();
        assert_eq!(c.len(), n);
        for z in &c {
            assert!((z.powu(7) - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn complex_triangular() {
        let m = DenseMatrix::from_fn(4, 4, |i, j| {
            if j >= i {
                C64::new((i + 1) as f64, (j as f64) * 0.5)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let ev = sorted_by_re_im(eigenvalues_complex(&m).unwrap());
        for (k, z) in ev.iter().enumerate() {
            assert!((z - C64::new((k + 1) as f64, k as f64 * 0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn real_and_complex_paths_agree() {
        let n = 9;
        let m = DenseMatrix::<f64>::from_fn(n, n, |i, j| {
            (((i * 31 + j * 17) % 11) as f64 - 5.0) / 3.0
        });
        let a = sorted_by_re_im(eigenvalues_real(&m).unwrap());
        let b = sorted_by_re_im(eigenvalues_complex(&m.to_complex()).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
        let tr: f64 = (0..n).map(|i| m[(i, i)]).sum();
        let s: C64 = a.iter().sum();
        assert!((s.re - tr).abs() < 1e-10 && s.im.abs() < 1e-10);
    }

    #[test]
    fn hermitian_eigen_exchange_and_complex() {
        let m = DenseMatrix::from_row_major(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let ev = hermitian_eigenvalues(&m).unwrap();
        assert_relative_eq!(ev[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1], 1.0, epsilon = 1e-14);

        // Hermitian with complex entries: compare with the general solver.
        let n = 6;
        let h = DenseMatrix::from_fn(n, n, |i, j| {
            let base = C64::new(((i + 2 * j) % 5) as f64 - 2.0, ((3 * i + j) % 4) as f64 - 1.5);
            match i.cmp(&j) {
                core::cmp::Ordering::Less => base,
                core::cmp::Ordering::Equal => C64::new(base.re, 0.0),
                core::cmp::Ordering::Greater => C64::new(0.0, 0.0),
            }
        });
        let h = DenseMatrix::from_fn(n, n, |i, j| if i <= j { h[(i, j)] } else { h[(j, i)].conj() });
        let ev = hermitian_eigenvalues(&h).unwrap();
        let mut g: Vec<f64> = eigenvalues_complex(&h).unwrap().iter().map(|z| z.re).collect();
        g.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in ev.iter().zip(&g) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn tridiagonal_last_row_components() {
        // 2x2 [[0,1],[1,0]]: eigenvectors (1,-1)/sqrt2 and (1,1)/sqrt2.
        let (ev, z) = tridiagonal_eigen(&[0.0, 0.0], &[1.0], true).unwrap();
        for (l, c) in ev.iter().zip(&z) {
            assert_relative_eq!(l.abs(), 1.0, epsilon = 1e-14);
            assert_relative_eq!(c.abs(), 0.5f64.sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn tridiagonal_vectors_diagonalise() {
        let d = [2.0, -1.0, 0.5, 3.0];
        let e = [1.0, 0.25, -0.75];
        let (ev, z) = tridiagonal_eigen_vectors(&d, &e).unwrap();
        let t = DenseMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                d[i]
            } else if i + 1 == j {
                e[i]
            } else if j + 1 == i {
                e[j]
            } else {
                0.0
            }
        });
        for (k, &lam) in ev.iter().enumerate() {
            let v: Vec<f64> = (0..4).map(|i| z[(i, k)]).collect();
            let tv = t.mul_vec(&v).unwrap();
            for i in 0..4 {
                assert!((tv[i] - lam * v[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn log_det_and_singular() {
        let m = DenseMatrix::from_row_major(2, 2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let ld = m.log_det().unwrap();
        assert_relative_eq!(ld.value().re, 5.0, epsilon = 1e-12);
        let s = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        let (y, res) = null_vector(&s).unwrap();
        assert!(res < 1e-12);
        assert_relative_eq!(y[0] / y[1], -2.0, epsilon = 1e-10);
    }
}
