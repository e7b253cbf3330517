//! The numerical symbol `F(τ) = Σ_{m≠0} K(m) e^{i m·τ}` on `Q = [−π, π]^d`.
//!
//! [`EwaldSymbol`] evaluates `F` through the Gaussian split of `|x|^(-d-2)` at
//! `s = β²`: a Fourier sum over `m` weighted by regularized upper incomplete
//! Gamma functions plus a Poisson sum of the cut-off symbol
//! `K̂(τ + 2πn) e^{−|τ+2πn|²/(4β²)}`. Both converge exponentially. The slow
//! direct partial sums and the closed-form constants live here as well.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{config, domain, Error, Result};
use crate::kernels::{BuiltinKernel, HomogeneousKernel, Kernel};
use crate::special::{gamma_half_integer, gamma_quarter, regularized_upper_gamma, unit_ball_volume};
use crate::{Block, Par};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Terms whose weight falls below this are skipped; their total contribution
/// is far below double precision of any symbol value.
const NEGLIGIBLE: f64 = 1e-22;

/// Slack allowed when checking `τ ∈ Q`.
const Q_SLACK: f64 = 1e-12;

/// Splitting parameter and truncation radii for the Ewald sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EwaldParams {
    pub beta: f64,
    /// Fourier sum runs over `0 < |m|_∞ ≤ fourier_radius`.
    pub fourier_radius: usize,
    /// Poisson sum runs over `|n|_∞ ≤ poisson_radius`.
    pub poisson_radius: usize,
}

impl EwaldParams {
    pub fn new(beta: f64, fourier_radius: usize, poisson_radius: usize) -> Result<Self> {
        let p = Self {
            beta,
            fourier_radius,
            poisson_radius,
        };
        p.validate()?;
        Ok(p)
    }

    /// `β = √π` with radius 4 for `d ≤ 2` and 5 otherwise.
    pub fn default_for(d: usize) -> Self {
        let m = if d <= 2 { 4 } else { 5 };
        Self {
            beta: PI.sqrt(),
            fourier_radius: m,
            poisson_radius: m,
        }
    }

    /// Same radius `m` for both sums and `β = √π`.
    pub fn with_radius(m: usize) -> Result<Self> {
        Self::new(PI.sqrt(), m, m)
    }

    /// Smallest radii whose tail bounds are at most `tol`.
    ///
    /// With `B = max_ij ‖p_ij‖_F`, a block entry satisfies `|K(m)| ≤ B |m|^(-d)`
    /// and `|K̂(ξ)| ≤ ν_d B`. A shell `|m|_∞ = k` holds at most `2d (2k+1)^(d-1)`
    /// points, all with `|m| ≥ k`, and `|τ + 2πn| ≥ (2k − 1)π` for `τ ∈ Q`,
    /// `|n|_∞ = k`. The tails beyond radius `M` are then bounded by
    ///
    /// * Fourier: `Σ_{k>M} 2d(2k+1)^(d-1) B k^(-d) Γ(d/2+1, β²k²)/Γ(d/2+1)`,
    /// * Poisson: `Σ_{k>M} 2d(2k+1)^(d-1) ν_d B e^{−(2k−1)²π²/(4β²)}`,
    ///
    /// both summed until the terms stop mattering.
    pub fn from_tolerance(kernel: &HomogeneousKernel, beta: f64, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return config(format!("tolerance must be positive, got {tol}"));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return config(format!("beta must be positive, got {beta}"));
        }
        let d = kernel.dim();
        let b = kernel.form_bound().max(f64::MIN_POSITIVE);
        let a = d as f64 / 2.0 + 1.0;
        let shell = |k: usize| 2.0 * d as f64 * (2.0 * k as f64 + 1.0).powi(d as i32 - 1);
        let fourier_term = |k: usize| -> f64 {
            let kf = k as f64;
            let q = regularized_upper_gamma(a, (beta * kf).powi(2).min(1e4)).unwrap_or(0.0);
            shell(k) * b * kf.powi(-(d as i32)) * q
        };
        let poisson_term = |k: usize| -> f64 {
            let r = (2.0 * k as f64 - 1.0) * PI;
            shell(k) * unit_ball_volume(d) * b * (-(r * r) / (4.0 * beta * beta)).exp()
        };
        let radius = |term: &dyn Fn(usize) -> f64| -> Result<usize> {
            for m in 1..=200 {
                let mut tail = 0.0;
                let mut k = m + 1;
                loop {
                    let t = term(k);
                    tail += t;
                    if t <= 1e-3 * tail.max(f64::MIN_POSITIVE) || k > m + 400 || t == 0.0 {
                        break;
                    }
                    k += 1;
                }
                if tail <= tol {
                    return Ok(m);
                }
            }
            config(format!("no truncation radius <= 200 reaches tolerance {tol} with beta {beta}"))
        };
        Self::new(beta, radius(&fourier_term)?, radius(&poisson_term)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return config(format!("beta must be positive, got {}", self.beta));
        }
        if self.fourier_radius < 1 || self.poisson_radius < 1 {
            return config("truncation radii must be >= 1");
        }
        Ok(())
    }
}

/// `F(τ)` at one point together with the parameters used.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolSample {
    pub tau: Vec<f64>,
    pub value: Block,
    pub params: EwaldParams,
}

fn check_tau(tau: &[f64], d: usize) -> Result<()> {
    if tau.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            got: tau.len(),
        });
    }
    if let Some(t) = tau.iter().find(|t| !(t.abs() <= PI + Q_SLACK)) {
        return domain(format!("tau component {t} is outside [-pi, pi]"));
    }
    Ok(())
}

/// Calls `f` on every point of the integer cube `[-radius, radius]^d`.
fn for_each_in_cube(d: usize, radius: i64, mut f: impl FnMut(&[i64])) {
    let mut m = vec![-radius; d];
    loop {
        f(&m);
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if m[k] < radius {
                m[k] += 1;
                break;
            }
            m[k] = -radius;
        }
    }
}

/// Whether `m` is in the half space `{m > 0}` in lexicographic order.
fn lex_positive(m: &[i64]) -> bool {
    m.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
}

/// Precomputed Ewald evaluator for one kernel and parameter set.
///
/// Construction computes the damped Fourier coefficients once; evaluation is
/// then cheap and `&self`, so one evaluator can be shared across threads.
#[derive(Clone, Debug)]
pub struct EwaldSymbol {
    kernel: HomogeneousKernel,
    params: EwaldParams,
    /// Half-space representatives `m`, flattened with stride `d`.
    fourier_m: Vec<i64>,
    /// `2 K(m) Γ(d/2+1, β²|m|²)/Γ(d/2+1)` row-major, stride `r²`.
    fourier_c: Vec<Complex64>,
}

impl EwaldSymbol {
    pub fn new(kernel: &HomogeneousKernel, params: EwaldParams) -> Result<Self> {
        params.validate()?;
        let d = kernel.dim();
        let r2 = kernel.block() * kernel.block();
        let a = d as f64 / 2.0 + 1.0;
        let scale = kernel.form_bound();
        let mut fourier_m = Vec::new();
        let mut fourier_c = Vec::new();
        let mut block = vec![ZERO; r2];
        let mut x = vec![0.0; d];
        let mut err = None;
        for_each_in_cube(d, params.fourier_radius as i64, |m| {
            if !lex_positive(m) || err.is_some() {
                return;
            }
            let norm2: i64 = m.iter().map(|v| v * v).sum();
            let q = match regularized_upper_gamma(a, params.beta * params.beta * norm2 as f64) {
                Ok(q) => q,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            if q * scale < NEGLIGIBLE {
                return;
            }
            for (xi, &mi) in x.iter_mut().zip(m) {
                *xi = mi as f64;
            }
            kernel.eval_into(&x, &mut block);
            fourier_m.extend_from_slice(m);
            fourier_c.extend(block.iter().map(|c| c * (2.0 * q)));
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(Self {
            kernel: kernel.clone(),
            params,
            fourier_m,
            fourier_c,
        })
    }

    pub fn kernel(&self) -> &HomogeneousKernel {
        &self.kernel
    }

    pub fn params(&self) -> EwaldParams {
        self.params
    }

    /// `F(τ)` as a block; `F(0)` is the zero block.
    pub fn eval(&self, tau: &[f64]) -> Result<Block> {
        check_tau(tau, self.kernel.dim())?;
        let r = self.kernel.block();
        let mut out = vec![ZERO; r * r];
        self.eval_into(tau, &mut out);
        Ok(Block::from_row_slice(r, r, &out))
    }

    pub fn sample(&self, tau: &[f64]) -> Result<SymbolSample> {
        Ok(SymbolSample {
            tau: tau.to_vec(),
            value: self.eval(tau)?,
            params: self.params,
        })
    }

    /// Unchecked evaluation, row-major into `out`.
    pub(crate) fn eval_into(&self, tau: &[f64], out: &mut [Complex64]) {
        out.fill(ZERO);
        if tau.iter().all(|&t| t == 0.0) {
            return;
        }
        self.fourier_part(tau, out);
        self.poisson_part(tau, out);
    }

    fn fourier_part(&self, tau: &[f64], out: &mut [Complex64]) {
        let d = tau.len();
        let mf = self.params.fourier_radius as i64;
        let width = (2 * mf + 1) as usize;
        // phases[k][j + M] = e^{i j τ_k}
        let phases: Vec<Complex64> = tau
            .iter()
            .flat_map(|&t| (-mf..=mf).map(move |j| Complex64::from_polar(1.0, j as f64 * t)))
            .collect();
        let r2 = out.len();
        for (m, c) in self.fourier_m.chunks_exact(d).zip(self.fourier_c.chunks_exact(r2)) {
            let mut ph = Complex64::new(1.0, 0.0);
            for (k, &mk) in m.iter().enumerate() {
                ph *= phases[k * width + (mk + mf) as usize];
            }
            let cosine = ph.re;
            for (o, &v) in out.iter_mut().zip(c) {
                *o += v * cosine;
            }
        }
    }

    fn poisson_part(&self, tau: &[f64], out: &mut [Complex64]) {
        let d = tau.len();
        let mp = self.params.poisson_radius as i64;
        let width = (2 * mp + 1) as usize;
        let inv4b2 = 1.0 / (4.0 * self.params.beta * self.params.beta);
        let shifted: Vec<f64> = tau
            .iter()
            .flat_map(|&t| (-mp..=mp).map(move |n| t + 2.0 * PI * n as f64))
            .collect();
        let weights: Vec<f64> = shifted.iter().map(|x| (-x * x * inv4b2).exp()).collect();
        let scale = self.kernel.form_bound() * unit_ball_volume(d);
        let mut block = vec![ZERO; out.len()];
        let mut xi = vec![0.0; d];
        for_each_in_cube(d, mp, |n| {
            let mut w = 1.0;
            for (k, &nk) in n.iter().enumerate() {
                let idx = k * width + (nk + mp) as usize;
                w *= weights[idx];
                xi[k] = shifted[idx];
            }
            if w * scale < NEGLIGIBLE || xi.iter().all(|&v| v == 0.0) {
                return;
            }
            self.kernel.symbol_hat_into(&xi, &mut block);
            for (o, &v) in out.iter_mut().zip(&block) {
                *o += v * w;
            }
        });
    }
}

/// `F(τ)` by Ewald summation.
pub fn ewald_symbol(kernel: &HomogeneousKernel, tau: &[f64], params: EwaldParams) -> Result<SymbolSample> {
    EwaldSymbol::new(kernel, params)?.sample(tau)
}

/// Partial sum `Σ_{0<|m|_∞≤M} K(m) e^{i m·τ}` over the cube.
pub fn direct_symbol_partial(kernel: &HomogeneousKernel, tau: &[f64], radius: usize, par: Par) -> Result<Block> {
    check_tau(tau, kernel.dim())?;
    if radius < 1 {
        return config("partial-sum radius must be >= 1");
    }
    let d = kernel.dim();
    let r = kernel.block();
    let m_max = radius as i64;
    let width = 2 * radius + 1;
    // The outermost axis is split across workers; the rest is a nested loop.
    let rows = par.fold(
        width,
        1,
        vec![ZERO; r * r],
        |mut acc, i| {
            let m0 = i as i64 - m_max;
            let mut block = vec![ZERO; r * r];
            let mut x = vec![0.0; d];
            for_each_in_cube(d - 1, m_max, |rest| {
                if m0 == 0 && rest.iter().all(|&v| v == 0) {
                    return;
                }
                x[0] = m0 as f64;
                let mut phase = m0 as f64 * tau[0];
                for (k, &v) in rest.iter().enumerate() {
                    x[k + 1] = v as f64;
                    phase += v as f64 * tau[k + 1];
                }
                kernel.eval_into(&x, &mut block);
                let e = Complex64::from_polar(1.0, phase);
                for (a, &b) in acc.iter_mut().zip(&block) {
                    *a += b * e;
                }
            });
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );
    Ok(Block::from_row_slice(r, r, &rows))
}

/// `F₀(τ) = F(τ) − K̂(τ)`, with `F₀(0) = 0`.
pub fn symbol_remainder_f0(kernel: &HomogeneousKernel, tau: &[f64], params: EwaldParams) -> Result<Block> {
    check_tau(tau, kernel.dim())?;
    let r = kernel.block();
    if tau.iter().all(|&t| t == 0.0) {
        return Ok(Block::zeros(r, r));
    }
    let f = EwaldSymbol::new(kernel, params)?.eval(tau)?;
    Ok(f - kernel.symbol_hat(tau)?)
}

/// Representation used for the integrand `H(ξ, s)` with `F = ∫₀^∞ H ds`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HRepresentation {
    /// `Σ_m p(m)/Γ(d/2+1) s^{d/2} e^{−|m|²s} e^{i m·ξ}`.
    Fourier,
    /// `Σ_n −π^{d/2} p(ξ+2πn) / (4Γ(d/2+1)) s^{−2} e^{−|ξ+2πn|²/(4s)}`.
    Poisson,
}

/// Truncated `H(ξ, s)` over `|m|_∞ ≤ M` or `|n|_∞ ≤ M`.
pub fn evaluate_h(
    kernel: &HomogeneousKernel,
    xi: &[f64],
    s: f64,
    rep: HRepresentation,
    radius: usize,
) -> Result<Block> {
    let d = kernel.dim();
    if xi.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            got: xi.len(),
        });
    }
    if !(s > 0.0) || !s.is_finite() {
        return domain(format!("s = {s} must be positive"));
    }
    let r = kernel.block();
    let g = gamma_half_integer(d as f64 / 2.0 + 1.0)?;
    let mut acc = vec![ZERO; r * r];
    let mut x = vec![0.0; d];
    let forms = kernel.forms();
    match rep {
        HRepresentation::Fourier => {
            let pre = s.powf(d as f64 / 2.0) / g;
            for_each_in_cube(d, radius as i64, |m| {
                if !lex_positive(m) {
                    return;
                }
                let mut norm2 = 0.0;
                let mut phase = 0.0;
                for (k, &mk) in m.iter().enumerate() {
                    x[k] = mk as f64;
                    norm2 += x[k] * x[k];
                    phase += x[k] * xi[k];
                }
                let w = 2.0 * pre * (-norm2 * s).exp() * phase.cos();
                for (a, f) in acc.iter_mut().zip(forms) {
                    *a += f.eval(&x) * w;
                }
            });
        }
        HRepresentation::Poisson => {
            let pre = -PI.powf(d as f64 / 2.0) / (4.0 * g * s * s);
            for_each_in_cube(d, radius as i64, |n| {
                let mut norm2 = 0.0;
                for (k, &nk) in n.iter().enumerate() {
                    x[k] = xi[k] + 2.0 * PI * nk as f64;
                    norm2 += x[k] * x[k];
                }
                let w = pre * (-norm2 / (4.0 * s)).exp();
                for (a, f) in acc.iter_mut().zip(forms) {
                    *a += f.eval(&x) * w;
                }
            });
        }
    }
    Ok(Block::from_row_slice(r, r, &acc))
}

/// How to compute a constant: closed form or a rapidly convergent series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lambda0Method {
    ClosedForm,
    Series(usize),
}

/// `Λ₀ = F(π, 0)` for the `ex3` kernel.
///
/// Closed form `Γ(1/4)⁴/(32π²)`; series `π/6 − Σ_{n≥1} (−1)ⁿ π / sinh²(πn)`.
pub fn lambda0(method: Lambda0Method) -> Result<f64> {
    match method {
        Lambda0Method::ClosedForm => Ok(gamma_quarter().powi(4) / (32.0 * PI * PI)),
        Lambda0Method::Series(0) => config("series needs at least one term"),
        Lambda0Method::Series(n) => {
            // Sum smallest terms first.
            let tail: f64 = (1..=n)
                .rev()
                .map(|k| {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sign * PI / (PI * k as f64).sinh().powi(2)
                })
                .sum();
            Ok(PI / 6.0 - tail)
        }
    }
}

/// Conformal radius of the unit square, `Γ(1/4)² / (4π^{3/2})`.
pub fn square_conformal_radius() -> f64 {
    gamma_quarter().powi(2) / (4.0 * PI.powf(1.5))
}

/// Closed form of `Σ_{n∈Z} (n² − y²)/(n² + y²)² e^{int}` for `t ∈ [−π, π]`, `y ≠ 0`.
///
/// With `σ(t) = −t + π sign t` the value is
/// `π (σ sinh(σy) sinh(πy) − π cosh(σy) cosh(πy)) / sinh²(πy)`; at `t = 0`
/// it is `−π²/sinh²(πy)`, the common limit from both sides.
pub fn ex3_line_series(t: f64, y: f64) -> Result<f64> {
    if y == 0.0 || !y.is_finite() {
        return domain(format!("y = {y}: the series has a pole at y = 0"));
    }
    if !(t.abs() <= PI) {
        return domain(format!("t = {t} is outside [-pi, pi]"));
    }
    let sh = (PI * y).sinh();
    if t == 0.0 {
        return Ok(-PI * PI / (sh * sh));
    }
    let sigma = -t + PI * t.signum();
    Ok(PI * (sigma * (sigma * y).sinh() * sh - PI * (sigma * y).cosh() * (PI * y).cosh()) / (sh * sh))
}

/// How to obtain the Maxwell extremes `(Λ₋, Λ₊)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaPmMethod {
    Ewald(EwaldParams),
    /// Explicit alternating lattice sums over the cube `|m|_∞ ≤ M`.
    CubePartial(usize),
}

/// `(Λ₋, Λ₊)` for the quasi-static Maxwell kernel in `d ∈ {2, 3}`.
///
/// `d = 3`: `Λ₊ = max Sp F(π,0,0)`, `Λ₋ = min Sp F(π,π,0)`.
/// `d = 2`: both from `F(π, 0)`, whose spectrum is `{−Λ₀, Λ₀}`.
pub fn maxwell_lambda_pm(d: usize, method: LambdaPmMethod, par: Par) -> Result<(f64, f64)> {
    if d != 2 && d != 3 {
        return config(format!(
            "closed lattice sums are available for d = 2, 3 only (got d = {d}); use symbol_range_scan"
        ));
    }
    match method {
        LambdaPmMethod::Ewald(params) => {
            let kernel = crate::kernels::builtin(BuiltinKernel::Maxwell(d))?;
            let ev = EwaldSymbol::new(&kernel, params)?;
            if d == 2 {
                let e = hermitian_eigenvalues(&ev.eval(&[PI, 0.0])?);
                Ok((e[0], e[1]))
            } else {
                let plus = hermitian_eigenvalues(&ev.eval(&[PI, 0.0, 0.0])?);
                let minus = hermitian_eigenvalues(&ev.eval(&[PI, PI, 0.0])?);
                Ok((minus[0], plus[2]))
            }
        }
        LambdaPmMethod::CubePartial(0) => config("cube radius must be >= 1"),
        LambdaPmMethod::CubePartial(m) => {
            if d == 2 {
                let plus = cube_sum_2d(m, par);
                Ok((-plus, plus))
            } else {
                let (minus, plus) = cube_sums_3d(m, par);
                Ok((minus, plus))
            }
        }
    }
}

/// `Σ (−1)^{m₁} (m₂² − m₁²) / (2π |m|⁴)` over `0 < |m|_∞ ≤ M`.
fn cube_sum_2d(m: usize, par: Par) -> f64 {
    let mi = m as i64;
    let total = par.fold(
        m + 1,
        8,
        0.0,
        |acc, a| {
            let a = a as i64;
            let mut s = 0.0;
            for b in 0..=mi {
                if a == 0 && b == 0 {
                    continue;
                }
                let (af, bf) = (a as f64, b as f64);
                let r2 = af * af + bf * bf;
                let mult = if a == 0 { 1.0 } else { 2.0 } * if b == 0 { 1.0 } else { 2.0 };
                let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                s += mult * sign * (bf * bf - af * af) / (r2 * r2);
            }
            acc + s
        },
        |a, b| a + b,
    );
    total / (2.0 * PI)
}

/// The two alternating sums giving `(Λ₋, Λ₊)` in `d = 3`, over `0 < |m|_∞ ≤ M`:
/// `Σ (−1)^{m₁+m₂} g(m)` and `Σ (−1)^{m₃} g(m)` with
/// `g(m) = (m₁² + m₂² − 2m₃²) / (4π |m|⁵)`.
fn cube_sums_3d(m: usize, par: Par) -> (f64, f64) {
    let mi = m as i64;
    let mult = |v: i64| if v == 0 { 1.0 } else { 2.0 };
    let sign = |v: i64| if v % 2 == 0 { 1.0 } else { -1.0 };
    let (minus, plus) = par.fold(
        m + 1,
        4,
        (0.0, 0.0),
        |(am, ap), a| {
            let a = a as i64;
            let (mut sm, mut sp) = (0.0, 0.0);
            for b in 0..=mi {
                for c in 0..=mi {
                    if a == 0 && b == 0 && c == 0 {
                        continue;
                    }
                    let (af, bf, cf) = (a as f64, b as f64, c as f64);
                    let r2 = af * af + bf * bf + cf * cf;
                    let g = mult(a) * mult(b) * mult(c) * (af * af + bf * bf - 2.0 * cf * cf)
                        / (r2 * r2 * r2.sqrt());
                    sm += sign(a + b) * g;
                    sp += sign(c) * g;
                }
            }
            (am + sm, ap + sp)
        },
        |(a, b), (c, d)| (a + c, b + d),
    );
    (minus / (4.0 * PI), plus / (4.0 * PI))
}

/// Eigenvalues of a Hermitian block in ascending order.
pub fn hermitian_eigenvalues(block: &Block) -> Vec<f64> {
    let r = block.nrows();
    match r {
        1 => vec![block[(0, 0)].re],
        2 => {
            let a = block[(0, 0)].re;
            let d = block[(1, 1)].re;
            let b = block[(0, 1)];
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            vec![mean - rad, mean + rad]
        }
        _ => {
            let h = (block + block.adjoint()) * Complex64::new(0.5, 0.0);
            let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
            e.sort_by(f64::total_cmp);
            e
        }
    }
}

/// Result of scanning `F` over a regular grid on `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolScan {
    /// Smallest eigenvalue (Hermitian) or real part (non-Hermitian scalar).
    pub min_eig: f64,
    pub max_eig: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
    /// All complex values, filled for non-Hermitian scalar kernels only.
    pub samples: Vec<Complex64>,
    pub points: usize,
}

/// `grid_n` equispaced points on `[−π, π]`, both ends included.
pub fn symmetric_grid(grid_n: usize) -> Vec<f64> {
    (0..grid_n)
        .map(|i| -PI + 2.0 * PI * i as f64 / (grid_n - 1) as f64)
        .collect()
}

#[derive(Clone)]
struct Extremes {
    min: f64,
    max: f64,
    argmin: usize,
    argmax: usize,
}

impl Extremes {
    const EMPTY: Extremes = Extremes {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        argmin: usize::MAX,
        argmax: usize::MAX,
    };

    fn push(mut self, lo: f64, hi: f64, at: usize) -> Self {
        if lo < self.min {
            self.min = lo;
            self.argmin = at;
        }
        if hi > self.max {
            self.max = hi;
            self.argmax = at;
        }
        self
    }

    fn merge(self, other: Self) -> Self {
        let mut out = self;
        if other.min < out.min {
            out.min = other.min;
            out.argmin = other.argmin;
        }
        if other.max > out.max {
            out.max = other.max;
            out.argmax = other.argmax;
        }
        out
    }
}

/// Evaluates `F` at the given points (flattened, stride `d`) and reduces to
/// extremes. Points must lie in `Q`.
pub fn scan_points(ev: &EwaldSymbol, points: &[f64], par: Par) -> Result<SymbolScan> {
    let kernel = ev.kernel();
    let d = kernel.dim();
    let r = kernel.block();
    if points.len() % d != 0 || points.is_empty() {
        return config("point list must be a nonempty multiple of the dimension");
    }
    for p in points.chunks_exact(d) {
        check_tau(p, d)?;
    }
    let hermitian = kernel.is_hermitian();
    if !hermitian && r > 1 {
        return config("symbol scans of non-Hermitian block kernels are not supported");
    }
    let count = points.len() / d;
    let value_at = |i: usize| {
        let mut out = vec![ZERO; r * r];
        ev.eval_into(&points[i * d..(i + 1) * d], &mut out);
        out
    };
    let (ext, samples) = if hermitian {
        let ext = par.fold(
            count,
            256,
            Extremes::EMPTY,
            |acc, i| {
                let v = value_at(i);
                let e = hermitian_eigenvalues(&Block::from_row_slice(r, r, &v));
                acc.push(e[0], e[r - 1], i)
            },
            Extremes::merge,
        );
        (ext, Vec::new())
    } else {
        let samples: Vec<Complex64> = par.map(count, |i| value_at(i)[0]);
        let ext = samples
            .iter()
            .enumerate()
            .fold(Extremes::EMPTY, |acc, (i, z)| acc.push(z.re, z.re, i));
        (ext, samples)
    };
    let at = |i: usize| points[i * d..(i + 1) * d].to_vec();
    Ok(SymbolScan {
        min_eig: ext.min,
        max_eig: ext.max,
        argmin: at(ext.argmin),
        argmax: at(ext.argmax),
        samples,
        points: count,
    })
}

/// `F` at each of the given points (flattened, stride `d`), in order.
pub fn eval_points(ev: &EwaldSymbol, points: &[f64], par: Par) -> Result<Vec<Block>> {
    let d = ev.kernel().dim();
    let r = ev.kernel().block();
    if points.len() % d != 0 {
        return config("point list must be a multiple of the dimension");
    }
    for p in points.chunks_exact(d) {
        check_tau(p, d)?;
    }
    Ok(par.map(points.len() / d, |i| {
        let mut out = vec![ZERO; r * r];
        ev.eval_into(&points[i * d..(i + 1) * d], &mut out);
        Block::from_row_slice(r, r, &out)
    }))
}

/// Scans `F` over the full tensor grid `symmetric_grid(grid_n)^d`.
pub fn symbol_range_scan(kernel: &HomogeneousKernel, params: EwaldParams, grid_n: usize, par: Par) -> Result<SymbolScan> {
    if grid_n < 2 {
        return config("grid_n must be >= 2");
    }
    let d = kernel.dim();
    let axis = symmetric_grid(grid_n);
    let total = grid_n
        .checked_pow(d as u32)
        .filter(|&t| t <= 1 << 28)
        .ok_or_else(|| Error::Config(format!("grid of {grid_n}^{d} points is too large")))?;
    let mut points = Vec::with_capacity(total * d);
    for i in 0..total {
        let mut rest = i;
        let start = points.len();
        points.resize(start + d, 0.0);
        for k in (0..d).rev() {
            points[start + k] = axis[rest % grid_n];
            rest /= grid_n;
        }
    }
    scan_points(&EwaldSymbol::new(kernel, params)?, &points, par)
}

/// `F` for any kernel: Ewald for homogeneous kernels, closed form for the sawtooth.
pub fn kernel_symbol(kernel: &Kernel, tau: &[f64], params: EwaldParams) -> Result<Block> {
    match kernel {
        Kernel::Homogeneous(k) => Ok(ewald_symbol(k, tau, params)?.value),
        Kernel::Sawtooth(_) => {
            check_tau(tau, 1)?;
            let v = crate::kernels::sawtooth_symbol(tau[0].clamp(-PI, PI))?;
            Ok(Block::from_element(1, 1, Complex64::new(v, 0.0)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::builtin;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k(b: BuiltinKernel) -> HomogeneousKernel {
        builtin(b).unwrap()
    }

    fn homogeneous() -> Vec<HomogeneousKernel> {
        [
            BuiltinKernel::Ex2,
            BuiltinKernel::Ex3,
            BuiltinKernel::Ex4,
            BuiltinKernel::Maxwell(2),
            BuiltinKernel::Maxwell(3),
        ]
        .into_iter()
        .map(k)
        .collect()
    }

    fn max_abs(b: &Block) -> f64 {
        b.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn random_tau(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.random_range(-PI..PI)).collect()
    }

    #[test]
    fn ex3_at_pi_zero_reproduces_lambda0() {
        let v = ewald_symbol(&k(BuiltinKernel::Ex3), &[PI, 0.0], EwaldParams::with_radius(3).unwrap()).unwrap();
        assert!((v.value[(0, 0)].re - 0.5471099038066192).abs() < 1e-13);
    }

    #[test]
    fn symbol_vanishes_at_origin() {
        for kernel in homogeneous() {
            let tau = vec![0.0; kernel.dim()];
            let v = EwaldSymbol::new(&kernel, EwaldParams::default_for(kernel.dim())).unwrap();
            assert_eq!(max_abs(&v.eval(&tau).unwrap()), 0.0);
            let direct = direct_symbol_partial(&kernel, &tau, 6, Par::Sequential).unwrap();
            assert!(max_abs(&direct) < 1e-14);
            let h = evaluate_h(&kernel, &tau, 1.0, HRepresentation::Fourier, 6).unwrap();
            assert!(max_abs(&h) < 1e-14);
        }
    }

    #[test]
    fn rejects_points_outside_q() {
        let kernel = k(BuiltinKernel::Ex2);
        assert!(matches!(
            ewald_symbol(&kernel, &[3.5, 0.0], EwaldParams::default_for(2)),
            Err(Error::Domain(_))
        ));
        assert!(ewald_symbol(&kernel, &[PI + 1e-13, 0.0], EwaldParams::default_for(2)).is_ok());
        assert!(EwaldParams::new(0.0, 3, 3).is_err());
        assert!(EwaldParams::new(1.0, 0, 3).is_err());
    }

    #[test]
    fn ex2_vanishes_on_the_boundary_of_q() {
        let ev = EwaldSymbol::new(&k(BuiltinKernel::Ex2), EwaldParams::default_for(2)).unwrap();
        for i in 0..100 {
            let y = -PI + 2.0 * PI * (i as f64 + 0.5) / 100.0;
            for tau in [[PI, y], [-PI, y], [y, PI], [y, -PI]] {
                assert!(max_abs(&ev.eval(&tau).unwrap()) < 1e-10, "tau = {tau:?}");
            }
        }
    }

    #[test]
    fn maxwell2_at_pi_zero_has_spectrum_plus_minus_lambda0() {
        let (lo, hi) = maxwell_lambda_pm(2, LambdaPmMethod::Ewald(EwaldParams::default_for(2)), Par::default()).unwrap();
        assert!((hi - 0.547109903806619).abs() < 1e-13);
        assert!((lo + 0.547109903806619).abs() < 1e-13);
    }

    #[test]
    fn maxwell3_extremes() {
        let (lo, hi) = maxwell_lambda_pm(3, LambdaPmMethod::Ewald(EwaldParams::default_for(3)), Par::default()).unwrap();
        assert!((hi - 0.7709022227747195).abs() < 1e-10, "{hi}");
        assert!((lo + 0.4260241507272727).abs() < 1e-10, "{lo}");
        assert!(maxwell_lambda_pm(4, LambdaPmMethod::CubePartial(4), Par::default()).is_err());
    }

    #[test]
    fn cube_partial_sums_approach_ewald_values() {
        let (lo, hi) = maxwell_lambda_pm(2, LambdaPmMethod::CubePartial(200), Par::default()).unwrap();
        assert!((hi - 0.547109903806619).abs() < 5e-3);
        assert!((lo + hi).abs() == 0.0);
        let (lo, hi) = maxwell_lambda_pm(3, LambdaPmMethod::CubePartial(60), Par::default()).unwrap();
        assert!((hi - 0.7709022227747195).abs() < 5e-3, "{hi}");
        assert!((lo + 0.4260241507272727).abs() < 5e-3, "{lo}");
    }

    #[test]
    fn beta_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kernel in homogeneous() {
            let evs: Vec<EwaldSymbol> = [0.8, 1.0, 1.2]
                .iter()
                .map(|f| {
                    let beta = f * PI.sqrt();
                    let params = EwaldParams::from_tolerance(&kernel, beta, 1e-13).unwrap();
                    EwaldSymbol::new(&kernel, params).unwrap()
                })
                .collect();
            for _ in 0..10 {
                let tau = random_tau(&mut rng, kernel.dim());
                let vals: Vec<Block> = evs.iter().map(|e| e.eval(&tau).unwrap()).collect();
                for a in &vals {
                    for b in &vals {
                        assert!(max_abs(&(a - b)) < 1e-10, "{} at {tau:?}", kernel.name());
                    }
                }
            }
        }
    }

    #[test]
    fn tolerance_radii_grow_as_tolerance_shrinks() {
        let kernel = k(BuiltinKernel::Maxwell(3));
        let loose = EwaldParams::from_tolerance(&kernel, PI.sqrt(), 1e-4).unwrap();
        let tight = EwaldParams::from_tolerance(&kernel, PI.sqrt(), 1e-14).unwrap();
        assert!(tight.fourier_radius >= loose.fourier_radius);
        assert!(tight.poisson_radius >= loose.poisson_radius);
        assert!(tight.fourier_radius > 1);
    }

    /// Both sides of the Poisson summation formula for a Gaussian.
    fn gaussian_sides(tau: &[f64], s: f64, radius: i64) -> (Complex64, f64) {
        let d = tau.len();
        let mut lhs = ZERO;
        let mut rhs = 0.0;
        for_each_in_cube(d, radius, |m| {
            let n2: f64 = m.iter().map(|&v| (v * v) as f64).sum();
            let phase: f64 = m.iter().zip(tau).map(|(&v, t)| v as f64 * t).sum();
            lhs += Complex64::from_polar((-n2 * s).exp(), phase);
            let x2: f64 = m.iter().zip(tau).map(|(&v, t)| (t + 2.0 * PI * v as f64).powi(2)).sum();
            rhs += (PI / s).powf(d as f64 / 2.0) * (-x2 / (4.0 * s)).exp();
        });
        (lhs, rhs)
    }

    #[test]
    fn poisson_summation_for_gaussians() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=3 {
            for s in [0.5, 1.0, 2.0] {
                for _ in 0..3 {
                    let tau = random_tau(&mut rng, d);
                    let (lhs, rhs) = gaussian_sides(&tau, s, 12);
                    assert!((lhs - rhs).norm() < 1e-12, "d={d} s={s}");
                }
            }
        }
    }

    #[test]
    fn h_representations_agree() {
        for kernel in homogeneous() {
            let xi: Vec<f64> = [1.0, 1.0, 0.4][..kernel.dim()].to_vec();
            let f = evaluate_h(&kernel, &xi, 0.7, HRepresentation::Fourier, 14).unwrap();
            let p = evaluate_h(&kernel, &xi, 0.7, HRepresentation::Poisson, 14).unwrap();
            assert!(max_abs(&(f - p)) < 1e-9, "{}", kernel.name());
        }
        assert!(evaluate_h(&k(BuiltinKernel::Ex2), &[1.0, 1.0], 0.0, HRepresentation::Fourier, 3).is_err());
    }

    #[test]
    fn ex2_h_vanishes_on_lateral_boundary() {
        let h = evaluate_h(&k(BuiltinKernel::Ex2), &[PI, 1.0], 1.0, HRepresentation::Fourier, 20).unwrap();
        assert!(max_abs(&h) < 1e-10);
    }

    #[test]
    fn h_solves_the_heat_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kernel in homogeneous() {
            let d = kernel.dim();
            let u = |xi: &[f64], s: f64| {
                evaluate_h(&kernel, xi, s, HRepresentation::Fourier, 12).unwrap() * Complex64::new(s.powf(-(d as f64) / 2.0), 0.0)
            };
            for _ in 0..4 {
                let xi: Vec<f64> = (0..d).map(|_| rng.random_range(-2.5..2.5)).collect();
                let s = rng.random_range(0.3..2.0);
                let h = 1e-3;
                let ds = (u(&xi, s + h) - u(&xi, s - h)) / Complex64::new(2.0 * h, 0.0);
                let mut lap = Block::zeros(kernel.block(), kernel.block());
                let centre = u(&xi, s);
                for j in 0..d {
                    let mut p = xi.clone();
                    let mut q = xi.clone();
                    p[j] += h;
                    q[j] -= h;
                    lap += (u(&p, s) + u(&q, s) - &centre * Complex64::new(2.0, 0.0)) / Complex64::new(h * h, 0.0);
                }
                let scale = max_abs(&ds).max(max_abs(&lap)).max(1e-3);
                assert!(max_abs(&(ds - lap)) / scale < 1e-4, "{}", kernel.name());
            }
        }
    }

    #[test]
    fn hermitian_and_real_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kernel in homogeneous() {
            let ev = EwaldSymbol::new(&kernel, EwaldParams::default_for(kernel.dim())).unwrap();
            for _ in 0..10 {
                let f = ev.eval(&random_tau(&mut rng, kernel.dim())).unwrap();
                if kernel.is_hermitian() {
                    assert!(max_abs(&(&f - f.adjoint())) < 1e-12);
                }
                if kernel.is_real() {
                    assert!(f.iter().all(|v| v.im.abs() < 1e-12));
                }
                if kernel.name().starts_with("maxwell") {
                    assert!(f.trace().norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ewald_agrees_with_direct_partial_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for kernel in homogeneous() {
            let ev = EwaldSymbol::new(&kernel, EwaldParams::default_for(kernel.dim())).unwrap();
            let (count, radius) = if kernel.dim() == 2 { (20, 400) } else { (3, 60) };
            for _ in 0..count {
                let tau = random_tau(&mut rng, kernel.dim());
                let direct = direct_symbol_partial(&kernel, &tau, radius, Par::default()).unwrap();
                assert!(max_abs(&(ev.eval(&tau).unwrap() - direct)) < 5e-3, "{} {tau:?}", kernel.name());
            }
        }
    }

    #[test]
    fn remainder_on_boundary_and_near_origin() {
        let ex2 = k(BuiltinKernel::Ex2);
        let params = EwaldParams::default_for(2);
        let f0 = symbol_remainder_f0(&ex2, &[PI, 0.5], params).unwrap();
        let khat = ex2.symbol_hat(&[PI, 0.5]).unwrap();
        assert!(max_abs(&(f0 + khat)) < 1e-10);
        let mut prev = f64::INFINITY;
        for t in [1e-1, 1e-2, 1e-3, 1e-4] {
            let v = max_abs(&symbol_remainder_f0(&k(BuiltinKernel::Ex3), &[t, 0.0], params).unwrap());
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-6);
        assert_eq!(max_abs(&symbol_remainder_f0(&ex2, &[0.0, 0.0], params).unwrap()), 0.0);
        // F ≥ 0, F₀ ≤ 0 in the open positive quadrant.
        for tau in [[0.4, 0.9], [1.7, 2.2], [2.9, 0.3]] {
            assert!(symbol_remainder_f0(&ex2, &tau, params).unwrap()[(0, 0)].re <= 1e-10);
        }
    }

    #[test]
    fn lambda0_methods() {
        let closed = lambda0(Lambda0Method::ClosedForm).unwrap();
        assert!((closed - 0.547109903806619).abs() < 1e-15);
        assert!((lambda0(Lambda0Method::Series(5)).unwrap() - closed).abs() <= 1e-14);
        assert!(lambda0(Lambda0Method::Series(0)).is_err());
        let r = square_conformal_radius();
        assert!((PI * r * r - 2.0 * closed).abs() <= 1e-14);
    }

    /// Direct sum over `|n| ≤ n_max` plus the Euler–Maclaurin tail
    /// `2 (∫_N^∞ f − f(N)/2 − f'(N)/12)` with `∫_N^∞ f = N/(N²+y²)`.
    fn line_series_oracle(t: f64, y: f64, n_max: i64) -> f64 {
        let f = |n: f64| (n * n - y * y) / (n * n + y * y).powi(2);
        let mut s = f(0.0);
        for n in (1..=n_max).rev() {
            let nf = n as f64;
            s += 2.0 * f(nf) * (nf * t).cos();
        }
        if t == 0.0 {
            let nf = n_max as f64;
            let h = 1e-3 * nf;
            let fp = (f(nf + h) - f(nf - h)) / (2.0 * h);
            s += 2.0 * (nf / (nf * nf + y * y) - f(nf) / 2.0 - fp / 12.0);
        }
        s
    }

    #[test]
    fn ex3_line_series_matches_direct_sums() {
        let v = ex3_line_series(0.0, 1.0).unwrap();
        assert!((v - line_series_oracle(0.0, 1.0, 100_000)).abs() < 1e-8);
        for &(t, y) in &[(1.0, 0.5), (2.5, 1.3), (-0.7, 2.0)] {
            let v = ex3_line_series(t, y).unwrap();
            assert!((v - line_series_oracle(t, y, 100_000)).abs() < 1e-4, "t={t} y={y}");
            assert_relative_eq!(v, ex3_line_series(-t, y).unwrap(), max_relative = 1e-14);
        }
        // Continuity at t = 0 and the pole coefficient −1/y² + π²/3 as y → 0.
        let near = ex3_line_series(1e-9, 0.8).unwrap();
        assert!((near - ex3_line_series(0.0, 0.8).unwrap()).abs() < 1e-7);
        let y: f64 = 1e-4;
        let v = ex3_line_series(0.0, y).unwrap() + 1.0 / (y * y);
        assert!((v / 2.0 - PI * PI / 6.0).abs() < 1e-6);
        assert!(ex3_line_series(0.5, 0.0).is_err());
    }

    #[test]
    fn ex3_grid_scan_reproduces_supf_protocol_small() {
        let scan = symbol_range_scan(&k(BuiltinKernel::Ex3), EwaldParams::with_radius(3).unwrap(), 101, Par::default()).unwrap();
        assert!((scan.max_eig - 0.5471099038066192).abs() < 1e-12);
        assert_eq!(scan.argmax.iter().map(|v| v.abs()).fold(0.0, f64::max), PI);
        let ex2 = symbol_range_scan(&k(BuiltinKernel::Ex2), EwaldParams::default_for(2), 101, Par::default()).unwrap();
        assert!(ex2.max_eig <= 0.5 + 1e-10);
        assert!(ex2.min_eig >= -0.5 - 1e-10);
        let ex4 = symbol_range_scan(&k(BuiltinKernel::Ex4), EwaldParams::default_for(2), 21, Par::default()).unwrap();
        assert_eq!(ex4.samples.len(), 21 * 21);
    }

    #[test]
    fn maxwell3_minimum_lies_on_boundary_coordinate_planes() {
        let scan = symbol_range_scan(&k(BuiltinKernel::Maxwell(3)), EwaldParams::default_for(3), 21, Par::default()).unwrap();
        let at = &scan.argmin;
        assert_eq!(at.iter().filter(|v| (v.abs() - PI).abs() < 1e-12).count(), 2, "{at:?}");
        assert!(at.iter().any(|&v| v == 0.0));
        assert!((scan.min_eig + 0.4260241507272727).abs() < 1e-10);
    }

    #[test]
    fn sequential_and_parallel_scans_agree() {
        let kernel = k(BuiltinKernel::Maxwell(2));
        let a = symbol_range_scan(&kernel, EwaldParams::default_for(2), 31, Par::Sequential).unwrap();
        let b = symbol_range_scan(&kernel, EwaldParams::default_for(2), 31, Par::default()).unwrap();
        assert_eq!(a, b);
    }
}
