//! Extreme eigenvalues, dense spectra, numerical-range boundaries and
//! extrapolation of eigenvalue sequences.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{config, Error, Result};
use crate::lattice::{LinearOperator, DEFAULT_DENSE_LIMIT};
use crate::Par;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which eigensolver produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigMethod {
    Lanczos,
    Dense,
    /// Dense for operators up to [`EigOptions::dense_below`] rows, Lanczos above.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: EigMethod,
    pub dense_below: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            method: EigMethod::Auto,
            dense_below: 400,
            seed: 0x5eed,
        }
    }
}

/// Extreme eigenvalues of a Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct EigResult {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub iterations: usize,
    /// `‖Tv − λv‖/‖v‖` for the minimal and maximal pair.
    pub residuals: [f64; 2],
    pub method: EigMethod,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(apply: &dyn Fn(&[Complex64], &mut [Complex64]), v: &[Complex64], lambda: f64) -> f64 {
    let mut w = vec![ZERO; v.len()];
    apply(v, &mut w);
    let r: f64 = w
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / norm(v)
}

/// Outcome of a Lanczos run, with the Ritz vector of the largest value.
pub(crate) struct Lanczos {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub vec_max: Vec<Complex64>,
    pub iterations: usize,
    pub residuals: [f64; 2],
    pub converged: bool,
}

/// Lanczos with full reorthogonalization for a Hermitian map on `C^n`.
///
/// The tridiagonal projection is diagonalized every ten steps; the extreme
/// Ritz pairs are accepted once their residual estimates `β_k |s_k|` are
/// below `tol` (only the maximal pair when `max_only`).
pub(crate) fn lanczos(
    apply: &dyn Fn(&[Complex64], &mut [Complex64]),
    n: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
    max_only: bool,
) -> Lanczos {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let cap = max_iter.min(n).max(1);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(cap);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; n];
    let mut scale = 0.0f64;
    let mut result = None;
    for k in 0..cap {
        apply(&v, &mut w);
        let a = dot(&v, &w).re;
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= vi * a;
        }
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= pi * b;
            }
        }
        basis.push(std::mem::take(&mut v));
        // Two passes of classical Gram–Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= qi * c;
                }
            }
        }
        alpha.push(a);
        let b = norm(&w);
        scale = scale.max(a.abs() + b);
        let breakdown = b <= 1e-14 * scale.max(f64::MIN_POSITIVE);
        let last = k + 1 == cap;
        if (k + 1) % 10 == 0 || breakdown || last {
            let off = &beta[..alpha.len() - 1];
            let m = alpha.len();
            let lmin = tridiagonal_kth(&alpha, off, 0);
            let lmax = tridiagonal_kth(&alpha, off, m - 1);
            let smin = tridiagonal_eigenvector(&alpha, off, lmin);
            let smax = tridiagonal_eigenvector(&alpha, off, lmax);
            let est = |s: &[f64]| if breakdown { 0.0 } else { b * s[m - 1].abs() };
            let done = est(&smax) <= tol && (max_only || est(&smin) <= tol);
            if done || breakdown || last {
                let ritz = |s: &[f64]| {
                    let mut y = vec![ZERO; n];
                    for (q, &c) in basis.iter().zip(s) {
                        for (yi, qi) in y.iter_mut().zip(q) {
                            *yi += qi * c;
                        }
                    }
                    y
                };
                let vec_min = ritz(&smin);
                let vec_max = ritz(&smax);
                let residuals = [residual(apply, &vec_min, lmin), residual(apply, &vec_max, lmax)];
                let converged = residuals[1] <= tol && (max_only || residuals[0] <= tol);
                result = Some(Lanczos {
                    lambda_min: lmin,
                    lambda_max: lmax,
                    vec_max,
                    iterations: k + 1,
                    residuals,
                    converged: converged || (breakdown && basis.len() == n),
                });
                if done || breakdown {
                    break;
                }
            }
        }
        beta.push(b);
        v = w.iter().map(|z| z / b).collect();
    }
    result.expect("loop runs at least once")
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `a` and off-diagonal `b` (Sturm sequence).
pub(crate) fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..a.len() {
        let prev = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] / q };
        q = a[i] - x - prev;
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (from 0) of a symmetric tridiagonal matrix,
/// by bisection to full precision.
pub(crate) fn tridiagonal_kth(a: &[f64], b: &[f64], k: usize) -> f64 {
    let n = a.len();
    debug_assert!(k < n && b.len() + 1 == n);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < n { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, b, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Unit eigenvector of a symmetric tridiagonal matrix for the eigenvalue
/// estimate `theta`, by inverse iteration with a pivoted tridiagonal solve.
pub(crate) fn tridiagonal_eigenvector(a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
    let n = a.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let shift = theta + scale * 1e-14;
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..3 {
        x = solve_tridiagonal(a, b, shift, &x, scale * f64::EPSILON);
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            break;
        }
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    x
}

/// Solves `(T − shift I) x = rhs` by Gaussian elimination with partial
/// pivoting; zero pivots are replaced by `tiny`.
fn solve_tridiagonal(a: &[f64], b: &[f64], shift: f64, rhs: &[f64], tiny: f64) -> Vec<f64> {
    let n = a.len();
    // Row i holds (d, u, w) at columns i, i+1, i+2 after elimination.
    let mut d: Vec<f64> = a.iter().map(|v| v - shift).collect();
    let mut u: Vec<f64> = (0..n).map(|i| if i + 1 < n { b[i] } else { 0.0 }).collect();
    let mut w = vec![0.0; n];
    let mut lower: Vec<f64> = b.to_vec();
    let mut y = rhs.to_vec();
    for i in 0..n - 1 {
        if lower[i].abs() > d[i].abs() {
            // Swap rows i and i+1.
            let (di, ui, wi, yi) = (d[i], u[i], w[i], y[i]);
            d[i] = lower[i];
            u[i] = d[i + 1];
            w[i] = u[i + 1];
            y[i] = y[i + 1];
            lower[i] = di;
            d[i + 1] = ui;
            u[i + 1] = wi;
            y[i + 1] = yi;
        }
        if d[i] == 0.0 {
            d[i] = tiny;
        }
        let f = lower[i] / d[i];
        d[i + 1] -= f * u[i];
        u[i + 1] -= f * w[i];
        y[i + 1] -= f * y[i];
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        if i + 1 < n {
            s -= u[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= w[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    x
}

fn extreme_indices(values: &DVector<f64>) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, &x) in values.iter().enumerate() {
        if x < values[imin] {
            imin = i;
        }
        if x > values[imax] {
            imax = i;
        }
    }
    (imin, imax)
}

/// The explicit matrix of an operator: stored, or built column by column.
pub fn operator_matrix(op: &dyn LinearOperator, limit: usize) -> Result<DMatrix<Complex64>> {
    if let Some(m) = op.dense() {
        return Ok(m.clone());
    }
    let n = op.dim();
    if n > limit {
        return Err(Error::SizeGuard { rows: n, limit });
    }
    let mut m = DMatrix::from_element(n, n, ZERO);
    let mut e = vec![ZERO; n];
    let mut col = vec![ZERO; n];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        op.apply(&e, &mut col);
        e[j] = ZERO;
        for (i, c) in col.iter().enumerate() {
            m[(i, j)] = *c;
        }
    }
    Ok(m)
}

/// Smallest and largest eigenvalue of a Hermitian operator.
pub fn extreme_eigs(op: &dyn LinearOperator, opts: EigOptions) -> Result<EigResult> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian);
    }
    if !(opts.tol > 0.0) {
        return config("eigensolver tolerance must be positive");
    }
    let n = op.dim();
    let dense = match opts.method {
        EigMethod::Dense => true,
        EigMethod::Lanczos => false,
        EigMethod::Auto => n <= opts.dense_below,
    };
    if dense {
        let m = operator_matrix(op, DEFAULT_DENSE_LIMIT)?;
        let eig = m.symmetric_eigen();
        let (imin, imax) = extreme_indices(&eig.eigenvalues);
        let apply = |x: &[Complex64], y: &mut [Complex64]| op.apply(x, y);
        let col = |i: usize| eig.eigenvectors.column(i).iter().copied().collect::<Vec<_>>();
        let residuals = [
            residual(&apply, &col(imin), eig.eigenvalues[imin]),
            residual(&apply, &col(imax), eig.eigenvalues[imax]),
        ];
        return Ok(EigResult {
            lambda_min: eig.eigenvalues[imin],
            lambda_max: eig.eigenvalues[imax],
            iterations: 0,
            residuals,
            method: EigMethod::Dense,
        });
    }
    let apply = |x: &[Complex64], y: &mut [Complex64]| op.apply(x, y);
    let out = lanczos(&apply, n, opts.tol, opts.max_iter, opts.seed, false);
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            lambda_min: out.lambda_min,
            lambda_max: out.lambda_max,
            residuals: out.residuals,
        });
    }
    Ok(EigResult {
        lambda_min: out.lambda_min,
        lambda_max: out.lambda_max,
        iterations: out.iterations,
        residuals: out.residuals,
        method: EigMethod::Lanczos,
    })
}

/// All eigenvalues of an explicit operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Spectrum {
    /// Hermitian case, ascending.
    Real(Vec<f64>),
    /// General case, sorted by real then imaginary part.
    Complex(Vec<Complex64>),
}

impl Spectrum {
    pub fn len(&self) -> usize {
        match self {
            Spectrum::Real(v) => v.len(),
            Spectrum::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_complex(&self) -> Vec<Complex64> {
        match self {
            Spectrum::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Spectrum::Complex(v) => v.clone(),
        }
    }
}

/// Full spectrum through dense factorization, refusing more than `limit` rows.
pub fn dense_spectrum(op: &dyn LinearOperator, limit: usize) -> Result<Spectrum> {
    let m = operator_matrix(op, limit)?;
    if m.nrows() > limit {
        return Err(Error::SizeGuard { rows: m.nrows(), limit });
    }
    if op.is_hermitian() {
        let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Ok(Spectrum::Real(v))
    } else {
        let e = m
            .eigenvalues()
            .ok_or_else(|| Error::NoConvergence {
                iterations: 0,
                lambda_min: f64::NAN,
                lambda_max: f64::NAN,
                residuals: [f64::NAN; 2],
            })?;
        let mut v: Vec<Complex64> = e.iter().copied().collect();
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(Spectrum::Complex(v))
    }
}

/// Boundary samples of the numerical range `W(T)` and their convex hull.
#[derive(Clone, Debug, PartialEq)]
pub struct NumRangeBoundary {
    pub angles: Vec<f64>,
    /// `p(θ) = ⟨v, Tv⟩/⟨v, v⟩` for the top eigenvector `v` of `Re(e^{iθ}T)`.
    pub points: Vec<Complex64>,
    /// Largest eigenvalue of `Re(e^{iθ}T)`, i.e. the support function at `θ`.
    pub support: Vec<f64>,
    /// Counterclockwise hull vertices.
    pub hull: Vec<Complex64>,
    /// Angles whose eigensolve did not converge.
    pub failed: Vec<f64>,
}

impl NumRangeBoundary {
    pub fn is_partial(&self) -> bool {
        !self.failed.is_empty()
    }

    /// `max Re z` over the hull.
    pub fn real_max(&self) -> f64 {
        self.hull.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn real_min(&self) -> f64 {
        self.hull.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }
}

/// Convex hull (monotone chain), counterclockwise, collinear points dropped.
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut p: Vec<Complex64> = points.iter().copied().filter(|z| z.re.is_finite() && z.im.is_finite()).collect();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: Complex64, a: Complex64, b: Complex64| (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re);
    let mut lower: Vec<Complex64> = Vec::new();
    for &z in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], z) <= 0.0 {
            lower.pop();
        }
        lower.push(z);
    }
    let mut upper: Vec<Complex64> = Vec::new();
    for &z in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], z) <= 0.0 {
            upper.pop();
        }
        upper.push(z);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Johnson's boundary algorithm at `n_angles` equispaced angles in `[0, 2π)`.
pub fn numerical_range(op: &dyn LinearOperator, n_angles: usize, opts: EigOptions, par: Par) -> Result<NumRangeBoundary> {
    if n_angles < 8 {
        return config("numerical range needs at least 8 angles");
    }
    let n = op.dim();
    let angles: Vec<f64> = (0..n_angles).map(|i| 2.0 * PI * i as f64 / n_angles as f64).collect();
    let dense = op.dense().filter(|_| n <= opts.dense_below).cloned().or_else(|| {
        if n <= opts.dense_below {
            operator_matrix(op, opts.dense_below).ok()
        } else {
            None
        }
    });
    let rayleigh = |v: &[Complex64]| {
        let mut tv = vec![ZERO; n];
        op.apply(v, &mut tv);
        dot(v, &tv) / dot(v, v).re
    };
    let per_angle = |i: usize| -> (Option<Complex64>, f64) {
        let e = Complex64::from_polar(1.0, angles[i]);
        match &dense {
            Some(m) => {
                let h = (m * e + m.adjoint() * e.conj()) * Complex64::new(0.5, 0.0);
                let eig = h.symmetric_eigen();
                let (_, imax) = extreme_indices(&eig.eigenvalues);
                let v: Vec<Complex64> = eig.eigenvectors.column(imax).iter().copied().collect();
                (Some(rayleigh(&v)), eig.eigenvalues[imax])
            }
            None => {
                let apply = |x: &[Complex64], y: &mut [Complex64]| {
                    let mut a = vec![ZERO; n];
                    op.apply(x, y);
                    op.apply_adjoint(x, &mut a);
                    for (yi, ai) in y.iter_mut().zip(&a) {
                        *yi = (*yi * e + ai * e.conj()) * 0.5;
                    }
                };
                let out = lanczos(&apply, n, opts.tol, opts.max_iter, opts.seed ^ i as u64, true);
                let p = if out.converged { Some(rayleigh(&out.vec_max)) } else { None };
                (p, out.lambda_max)
            }
        }
    };
    let results = par.map(n_angles, per_angle);
    let mut points = Vec::with_capacity(n_angles);
    let mut support = Vec::with_capacity(n_angles);
    let mut failed = Vec::new();
    let mut kept_angles = Vec::with_capacity(n_angles);
    for (i, (p, s)) in results.into_iter().enumerate() {
        match p {
            Some(z) => {
                points.push(z);
                support.push(s);
                kept_angles.push(angles[i]);
            }
            None => failed.push(angles[i]),
        }
    }
    let hull = convex_hull(&points);
    Ok(NumRangeBoundary {
        angles: kept_angles,
        points,
        support,
        hull,
        failed,
    })
}

/// Aitken extrapolation of `λ_N` along a geometric sequence of `N`.
///
/// Each window `(N₁, N₂, N₃)` is fitted by `λ_N = λ_∞ + c N^{−α}`, which for
/// constant ratio `N_{i+1}/N_i` gives `λ_∞ = λ₃ + δ₂ q/(1 − q)` with
/// `δ_i` the successive differences and `q = δ₂/δ₁`. The estimate is
/// assigned to `N₃`.
pub fn extrapolate(values: &[(usize, f64)]) -> Result<Vec<(usize, f64)>> {
    if values.len() < 3 {
        return config("extrapolation needs at least three (N, lambda) pairs");
    }
    let ratio = values[1].0 as f64 / values[0].0 as f64;
    if !(ratio > 1.0) {
        return config("N must be increasing");
    }
    for w in values.windows(2) {
        let r = w[1].0 as f64 / w[0].0 as f64;
        if (r - ratio).abs() > 1e-12 * ratio {
            return config(format!("N sequence is not geometric: ratio {r} vs {ratio}"));
        }
    }
    values
        .windows(3)
        .map(|w| {
            let d1 = w[1].1 - w[0].1;
            let d2 = w[2].1 - w[1].1;
            let q = d2 / d1;
            if !(q > 0.0 && q < 1.0) {
                return config(format!(
                    "differences are not monotone at N = {}: {d1:e}, {d2:e}",
                    w[2].0
                ));
            }
            Ok((w[2].0, w[2].1 + d2 * q / (1.0 - q)))
        })
        .collect()
}
