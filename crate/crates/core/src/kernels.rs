//! Homogeneous kernels `K(x) = p(x) |x|^(-d-2)` with trace-free quadratic `p`,
//! their Fourier symbols, and the built-in examples.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{config, domain, Error, Result};
use crate::special::unit_ball_volume;
use crate::Block;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Symmetric quadratic form `p(x) = xᵀ C x` with complex, trace-free `C`.
///
/// Trace-freeness is the spherical cancellation condition `∫_{S^{d-1}} p = 0`
/// for quadratics and is enforced at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    dim: usize,
    /// Row-major `dim × dim`.
    coeff: Vec<Complex64>,
}

impl QuadraticForm {
    pub fn new(dim: usize, coeff: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return config("quadratic form needs dimension >= 1");
        }
        if coeff.len() != dim * dim {
            return Err(Error::LengthMismatch {
                expected: dim * dim,
                got: coeff.len(),
            });
        }
        let scale = coeff.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (coeff[i * dim + j] - coeff[j * dim + i]).norm() > 1e-14 * scale {
                    return config(format!("quadratic form is not symmetric at ({i}, {j})"));
                }
            }
        }
        let trace: Complex64 = (0..dim).map(|i| coeff[i * dim + i]).sum();
        if trace.norm() > 1e-13 * scale {
            return config(format!(
                "quadratic form violates the cancellation condition: trace = {trace}"
            ));
        }
        Ok(Self { dim, coeff })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeff: vec![ZERO; dim * dim],
        }
    }

    /// `a_jk(x) = x_j² − x_k²`.
    pub fn a(dim: usize, j: usize, k: usize) -> Self {
        assert!(j < dim && k < dim && j != k);
        let mut q = Self::zero(dim);
        q.coeff[j * dim + j] = Complex64::new(1.0, 0.0);
        q.coeff[k * dim + k] = Complex64::new(-1.0, 0.0);
        q
    }

    /// `b_jk(x) = x_j x_k`.
    pub fn b(dim: usize, j: usize, k: usize) -> Self {
        assert!(j < dim && k < dim && j != k);
        let mut q = Self::zero(dim);
        q.coeff[j * dim + k] = Complex64::new(0.5, 0.0);
        q.coeff[k * dim + j] = Complex64::new(0.5, 0.0);
        q
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            dim: self.dim,
            coeff: self.coeff.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            coeff: self.coeff.iter().zip(&other.coeff).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            coeff: self.coeff.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self) -> Block {
        Block::from_row_slice(self.dim, self.dim, &self.coeff)
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            let mut row = ZERO;
            for j in 0..d {
                row += self.coeff[i * d + j] * x[j];
            }
            acc += row * x[i];
        }
        acc
    }

    /// Largest `|p(x)|` over `|x| = 1` is bounded by this Frobenius norm.
    pub(crate) fn frobenius_norm(&self) -> f64 {
        self.coeff.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.coeff
            .iter()
            .zip(&other.coeff)
            .all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// Matrix-valued kernel `K(x) = p(x) |x|^(-d-2)` on `R^d`, `d ≥ 2`, with an
/// `r × r` array of trace-free quadratic forms.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousKernel {
    name: String,
    dim: usize,
    block: usize,
    /// Row-major `block × block`.
    forms: Vec<QuadraticForm>,
    hermitian: bool,
}

impl HomogeneousKernel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        block: usize,
        forms: Vec<QuadraticForm>,
    ) -> Result<Self> {
        if dim < 2 {
            return config("homogeneous kernels need d >= 2; use the sawtooth kernel for d = 1");
        }
        if block == 0 || forms.len() != block * block {
            return config(format!(
                "expected {} quadratic forms for block size {block}, got {}",
                block * block,
                forms.len()
            ));
        }
        for f in &forms {
            if f.dim != dim {
                return config("quadratic form dimension differs from kernel dimension");
            }
            // Re-validate in case the forms were assembled with `plus`/`scaled`.
            QuadraticForm::new(dim, f.coeff.clone())?;
        }
        let hermitian = (0..block).all(|i| {
            (0..block).all(|j| forms[i * block + j].approx_eq(&forms[j * block + i].conj(), 1e-14))
        });
        Ok(Self {
            name: name.into(),
            dim,
            block,
            forms,
            hermitian,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn forms(&self) -> &[QuadraticForm] {
        &self.forms
    }

    /// Whether `K(x)` is a Hermitian matrix for every `x ≠ 0`.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Whether every form has real coefficients.
    pub fn is_real(&self) -> bool {
        self.forms
            .iter()
            .all(|f| f.coeff.iter().all(|c| c.im == 0.0))
    }

    /// `max_{ij} ‖p_ij‖_F`, an upper bound for `|p_ij(x)|` on the unit sphere.
    pub(crate) fn form_bound(&self) -> f64 {
        self.forms.iter().map(|f| f.frobenius_norm()).fold(0.0, f64::max)
    }

    /// `K(x) = p(x) |x|^(-d-2)`.
    pub fn eval(&self, x: &[f64]) -> Result<Block> {
        self.check_point(x, "kernel")?;
        let mut out = vec![ZERO; self.block * self.block];
        self.eval_into(x, &mut out);
        Ok(Block::from_row_slice(self.block, self.block, &out))
    }

    /// Unchecked `K(x)` written row-major into `out`.
    pub(crate) fn eval_into(&self, x: &[f64], out: &mut [Complex64]) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let scale = r2.powf(-(self.dim as f64) / 2.0 - 1.0);
        for (o, f) in out.iter_mut().zip(&self.forms) {
            *o = f.eval(x) * scale;
        }
    }

    /// Fourier symbol `K̂(ξ) = −ν_d p(ξ) / |ξ|²`.
    pub fn symbol_hat(&self, xi: &[f64]) -> Result<Block> {
        self.check_point(xi, "symbol")?;
        let mut out = vec![ZERO; self.block * self.block];
        self.symbol_hat_into(xi, &mut out);
        Ok(Block::from_row_slice(self.block, self.block, &out))
    }

    pub(crate) fn symbol_hat_into(&self, xi: &[f64], out: &mut [Complex64]) {
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        let scale = -unit_ball_volume(self.dim) / r2;
        for (o, f) in out.iter_mut().zip(&self.forms) {
            *o = f.eval(xi) * scale;
        }
    }

    fn check_point(&self, x: &[f64], what: &str) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().all(|&v| v == 0.0) {
            return domain(format!("{what} is singular at the origin"));
        }
        Ok(())
    }
}

/// The one-dimensional kernel `K(x) = 1/(iπx)` (finite Hilbert transform).
///
/// Its numerical symbol is known in closed form, see [`sawtooth_symbol`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SawtoothKernel1D;

impl SawtoothKernel1D {
    pub fn eval(&self, x: f64) -> Result<Complex64> {
        if x == 0.0 {
            return domain("kernel is singular at the origin");
        }
        Ok(Complex64::new(0.0, -1.0 / (PI * x)))
    }
}

/// `F(τ) = sign τ − τ/π` for `τ ≠ 0`, `F(0) = 0`, on `[−π, π]`.
///
/// Arguments outside `[−π, π]` are rejected; callers reduce modulo `2π`.
pub fn sawtooth_symbol(tau: f64) -> Result<f64> {
    if !(tau.abs() <= PI) {
        return domain(format!("tau = {tau} is outside [-pi, pi]"));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    Ok(tau.signum() - tau / PI)
}

/// Built-in kernels selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinKernel {
    /// `d = 1`, `K(x) = 1/(iπx)`.
    Sawtooth,
    /// `d = 2`, `K(x) = −x₁x₂/(π|x|⁴)`.
    Ex2,
    /// `d = 2`, `K(x) = (x₂² − x₁²)/(2π|x|⁴)`.
    Ex3,
    /// `d = 2`, `K(x) = (x₂² − x₁² − 2i x₁x₂)/(π|x|⁴)`.
    Ex4,
    /// Quasi-static Maxwell kernel `−(1/ν_d)(x xᵀ − |x|²I/d)|x|^(-d-2)`.
    Maxwell(usize),
}

impl BuiltinKernel {
    /// Parses a kernel name; `dim` is required for `maxwell` only.
    pub fn parse(name: &str, dim: Option<usize>) -> Result<Self> {
        let k = match name.to_ascii_lowercase().as_str() {
            "sawtooth" | "ex1" | "hilbert" => BuiltinKernel::Sawtooth,
            "ex2" => BuiltinKernel::Ex2,
            "ex3" => BuiltinKernel::Ex3,
            "ex4" => BuiltinKernel::Ex4,
            "maxwell" | "ex5" => match dim {
                Some(d) => BuiltinKernel::Maxwell(d),
                None => return config("kernel maxwell requires a dimension d"),
            },
            other => return config(format!("unknown kernel name '{other}'")),
        };
        if let Some(d) = dim {
            if d != k.dim() {
                return config(format!("kernel {name} is defined for d = {}, not d = {d}", k.dim()));
            }
        }
        Ok(k)
    }

    pub fn dim(&self) -> usize {
        match self {
            BuiltinKernel::Sawtooth => 1,
            BuiltinKernel::Ex2 | BuiltinKernel::Ex3 | BuiltinKernel::Ex4 => 2,
            BuiltinKernel::Maxwell(d) => *d,
        }
    }

    pub fn build(&self) -> Result<Kernel> {
        match *self {
            BuiltinKernel::Sawtooth => Ok(Kernel::Sawtooth(SawtoothKernel1D)),
            other => builtin(other).map(Kernel::Homogeneous),
        }
    }

    /// All five built-ins used by the property suites (Maxwell in d = 2, 3).
    pub fn all() -> [BuiltinKernel; 6] {
        [
            BuiltinKernel::Sawtooth,
            BuiltinKernel::Ex2,
            BuiltinKernel::Ex3,
            BuiltinKernel::Ex4,
            BuiltinKernel::Maxwell(2),
            BuiltinKernel::Maxwell(3),
        ]
    }
}

impl fmt::Display for BuiltinKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinKernel::Sawtooth => write!(f, "sawtooth"),
            BuiltinKernel::Ex2 => write!(f, "ex2"),
            BuiltinKernel::Ex3 => write!(f, "ex3"),
            BuiltinKernel::Ex4 => write!(f, "ex4"),
            BuiltinKernel::Maxwell(d) => write!(f, "maxwell{d}"),
        }
    }
}

impl FromStr for BuiltinKernel {
    type Err = Error;

    /// Accepts `ex2`, `ex3`, `ex4`, `sawtooth` and `maxwell<d>` (e.g. `maxwell3`).
    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.to_ascii_lowercase().strip_prefix("maxwell") {
            if !rest.is_empty() {
                let d = rest
                    .trim_start_matches(['(', '_', '-'])
                    .trim_end_matches(')')
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad maxwell dimension in '{s}'")))?;
                return Self::parse("maxwell", Some(d));
            }
        }
        Self::parse(s, None)
    }
}

/// Builds a homogeneous built-in kernel with its standard normalization.
pub fn builtin(which: BuiltinKernel) -> Result<HomogeneousKernel> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match which {
        BuiltinKernel::Sawtooth => config("the sawtooth kernel is not of the form p(x)|x|^(-d-2)"),
        BuiltinKernel::Ex2 => {
            let p = QuadraticForm::b(2, 0, 1).scaled(c(-1.0 / PI, 0.0));
            HomogeneousKernel::new("ex2", 2, 1, vec![p])
        }
        BuiltinKernel::Ex3 => {
            let p = QuadraticForm::a(2, 0, 1).scaled(c(-1.0 / (2.0 * PI), 0.0));
            HomogeneousKernel::new("ex3", 2, 1, vec![p])
        }
        BuiltinKernel::Ex4 => {
            let p = QuadraticForm::a(2, 0, 1)
                .plus(&QuadraticForm::b(2, 0, 1).scaled(c(0.0, 2.0)))
                .scaled(c(-1.0 / PI, 0.0));
            HomogeneousKernel::new("ex4", 2, 1, vec![p])
        }
        BuiltinKernel::Maxwell(d) => {
            if d < 2 {
                return config(format!("maxwell kernel requires d >= 2, got {d}"));
            }
            let nu = unit_ball_volume(d);
            let mut forms = Vec::with_capacity(d * d);
            for i in 0..d {
                for k in 0..d {
                    let form = if i == k {
                        // −(x_k² − |x|²/d)/ν = (1/(dν)) Σ_j a_jk(x)
                        (0..d)
                            .filter(|&j| j != k)
                            .map(|j| QuadraticForm::a(d, j, k))
                            .fold(QuadraticForm::zero(d), |acc, q| acc.plus(&q))
                            .scaled(c(1.0 / (d as f64 * nu), 0.0))
                    } else {
                        QuadraticForm::b(d, i, k).scaled(c(-1.0 / nu, 0.0))
                    };
                    forms.push(form);
                }
            }
            HomogeneousKernel::new(format!("maxwell{d}"), d, d, forms)
        }
    }
}

/// Any kernel that defines a (block) Toeplitz finite-section operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    Homogeneous(HomogeneousKernel),
    Sawtooth(SawtoothKernel1D),
}

impl Kernel {
    pub fn builtin(which: BuiltinKernel) -> Result<Self> {
        which.build()
    }

    pub fn name(&self) -> &str {
        match self {
            Kernel::Homogeneous(k) => k.name(),
            Kernel::Sawtooth(_) => "sawtooth",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Kernel::Homogeneous(k) => k.dim(),
            Kernel::Sawtooth(_) => 1,
        }
    }

    pub fn block(&self) -> usize {
        match self {
            Kernel::Homogeneous(k) => k.block(),
            Kernel::Sawtooth(_) => 1,
        }
    }

    /// Whether the Toeplitz matrix `(K(m − n))` is Hermitian.
    pub fn is_hermitian(&self) -> bool {
        match self {
            Kernel::Homogeneous(k) => k.is_hermitian(),
            Kernel::Sawtooth(_) => true,
        }
    }

    pub fn as_homogeneous(&self) -> Option<&HomogeneousKernel> {
        match self {
            Kernel::Homogeneous(k) => Some(k),
            Kernel::Sawtooth(_) => None,
        }
    }

    /// Toeplitz coefficient `K(m)` for an integer offset `m`, zero at `m = 0`.
    pub(crate) fn lattice_coefficient_into(&self, m: &[i64], out: &mut [Complex64]) {
        if m.iter().all(|&v| v == 0) {
            out.fill(ZERO);
            return;
        }
        match self {
            Kernel::Homogeneous(k) => {
                let mut x = [0.0; 8];
                for (xi, &mi) in x.iter_mut().zip(m) {
                    *xi = mi as f64;
                }
                k.eval_into(&x[..m.len()], out);
            }
            Kernel::Sawtooth(_) => out[0] = Complex64::new(0.0, -1.0 / (PI * m[0] as f64)),
        }
    }
}

impl From<HomogeneousKernel> for Kernel {
    fn from(k: HomogeneousKernel) -> Self {
        Kernel::Homogeneous(k)
    }
}
