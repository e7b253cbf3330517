//! Krylov solvers for the shifted system `(λI − T)u = f`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{config, Error, Result};
use crate::lattice::LinearOperator;
use crate::spectra::{sturm_count, tridiagonal_kth};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const GMRES_RESTART: usize = 100;
/// A Ritz value of `λI − T` below this (relative to the largest one) marks
/// the shift as sitting on an eigenvalue.
pub const NEAR_SINGULAR_TOL: f64 = 1e-12;

/// Residual history window used to detect stagnation.
const STAGNATION_WINDOW: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Minres,
    Gmres,
    /// MINRES for a Hermitian operator and real shift, GMRES otherwise.
    Auto,
}

impl SolveMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minres" => Ok(Self::Minres),
            "gmres" => Ok(Self::Gmres),
            "auto" => Ok(Self::Auto),
            _ => config(format!("unknown solver method '{s}'")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Minres => "minres",
            Self::Gmres => "gmres",
            Self::Auto => "auto",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub lambda: Complex64,
    pub method: SolveMethod,
    pub iterations: usize,
    /// True residual `‖(λI − T)u − f‖ / ‖f‖`.
    pub relative_residual: f64,
    pub solution: Vec<Complex64>,
    pub converged: bool,
    /// Stagnation with a Ritz value of `λI − T` at zero.
    pub near_singular: bool,
    /// Smallest Ritz value magnitude of `λI − T` seen by the solver.
    pub min_ritz: f64,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `y = (λI − T)x`.
struct Shifted<'a> {
    op: &'a dyn LinearOperator,
    lambda: Complex64,
}

impl Shifted<'_> {
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.op.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.lambda * xi - *yi;
        }
    }

    fn residual(&self, x: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
        let mut r = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply(x, &mut r);
        for (ri, fi) in r.iter_mut().zip(f) {
            *ri = fi - *ri;
        }
        r
    }
}

struct Inner {
    x: Vec<Complex64>,
    iterations: usize,
    /// Smallest and largest Ritz value magnitudes.
    ritz: (f64, f64),
    stagnated: bool,
}

fn stagnating(history: &[f64]) -> bool {
    let n = history.len();
    n > 2 * STAGNATION_WINDOW && history[n - 1] > 0.9 * history[n - 1 - STAGNATION_WINDOW]
}

fn tridiagonal_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    if k == 0 {
        return (f64::INFINITY, 0.0);
    }
    let lo = tridiagonal_kth(alpha, beta, 0);
    let hi = tridiagonal_kth(alpha, beta, k - 1);
    // Smallest magnitude: the eigenvalues on either side of zero.
    let below = sturm_count(alpha, beta, 0.0);
    let mut min_abs = f64::INFINITY;
    for i in [below.wrapping_sub(1), below] {
        if i < k {
            min_abs = min_abs.min(tridiagonal_kth(alpha, beta, i).abs());
        }
    }
    (min_abs, lo.abs().max(hi.abs()))
}

/// MINRES for the Hermitian system `A x = b`, `x₀ = 0`.
fn minres(a: &Shifted, b: &[Complex64], tol: f64, max_iter: usize) -> Inner {
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let beta1 = norm(b);
    let mut x = vec![zero; n];
    if beta1 == 0.0 {
        return Inner { x, iterations: 0, ritz: (f64::INFINITY, 0.0), stagnated: false };
    }
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = b.to_vec();
    let mut v = vec![zero; n];
    let mut w = vec![zero; n];
    let mut w1 = vec![zero; n];
    let mut w2 = vec![zero; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0f64, 0.0f64);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut history = Vec::new();
    let mut it = 0;
    let mut stagnated = false;
    while it < max_iter {
        it += 1;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = yi / beta;
        }
        a.apply(&v, &mut y);
        if it >= 2 {
            axpy(Complex64::new(-beta / oldb, 0.0), &r1, &mut y);
        }
        let alfa = dot(&v, &y).re;
        axpy(Complex64::new(-alfa / beta, 0.0), &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm(&y);
        alphas.push(alfa);
        betas.push(beta);

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON * beta1);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - w1[i] * oldeps - w2[i] * delta) / gamma;
            x[i] += w[i] * phi;
        }
        history.push(phibar / beta1);
        if phibar / beta1 <= tol || beta == 0.0 {
            break;
        }
        if it % STAGNATION_WINDOW == 0 && stagnating(&history) {
            stagnated = true;
            break;
        }
    }
    Inner {
        x,
        iterations: it,
        ritz: tridiagonal_ritz(&alphas, &betas[..betas.len().saturating_sub(1)]),
        stagnated,
    }
}

fn hessenberg_ritz(h: &DMatrix<Complex64>, k: usize) -> (f64, f64) {
    if k == 0 {
        return (f64::INFINITY, 0.0);
    }
    let sq = h.view((0, 0), (k, k)).into_owned();
    match sq.try_schur(1e-14, 10_000) {
        Some(s) => s
            .eigenvalues()
            .map(|ev| ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.norm()), hi.max(v.norm()))))
            .unwrap_or((f64::INFINITY, 0.0)),
        None => (f64::INFINITY, 0.0),
    }
}

/// Restarted GMRES(m) for `A x = b`, `x₀ = 0`.
fn gmres(a: &Shifted, b: &[Complex64], tol: f64, max_iter: usize, restart: usize) -> Inner {
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = norm(b);
    let mut x = vec![zero; n];
    let mut ritz = (f64::INFINITY, 0.0f64);
    if bnorm == 0.0 {
        return Inner { x, iterations: 0, ritz, stagnated: false };
    }
    let m = restart.max(1).min(n.max(1));
    let mut it = 0;
    let mut history = Vec::new();
    let mut stagnated = false;
    'outer: while it < max_iter {
        let r = a.residual(&x, b);
        let beta = norm(&r);
        if beta / bnorm <= tol {
            break;
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut h = DMatrix::<Complex64>::zeros(m + 1, m);
        let mut h_raw = DMatrix::<Complex64>::zeros(m, m);
        let mut cs = vec![zero; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k = 0;
        let mut done = false;
        while k < m && it < max_iter {
            it += 1;
            let mut wv = vec![zero; n];
            a.apply(&basis[k], &mut wv);
            for (j, q) in basis.iter().enumerate() {
                let hij = dot(q, &wv);
                h[(j, k)] = hij;
                h_raw[(j, k)] = hij;
                axpy(-hij, q, &mut wv);
            }
            let hn = norm(&wv);
            h[(k + 1, k)] = Complex64::new(hn, 0.0);
            if k + 1 < m {
                h_raw[(k + 1, k)] = Complex64::new(hn, 0.0);
            }
            for j in 0..k {
                let t = cs[j].conj() * h[(j, k)] + sn[j].conj() * h[(j + 1, k)];
                h[(j + 1, k)] = -sn[j] * h[(j, k)] + cs[j] * h[(j + 1, k)];
                h[(j, k)] = t;
            }
            let (p, q) = (h[(k, k)], h[(k + 1, k)]);
            let den = (p.norm_sqr() + q.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[k] = Complex64::new(1.0, 0.0);
                sn[k] = zero;
            } else {
                cs[k] = p / den;
                sn[k] = q / den;
            }
            h[(k, k)] = Complex64::new(den, 0.0);
            h[(k + 1, k)] = zero;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k += 1;
            let res = g[k].norm() / bnorm;
            history.push(res);
            let breakdown = hn <= 1e-14 * beta;
            if res <= tol || breakdown {
                done = true;
            } else if it % STAGNATION_WINDOW == 0 && stagnating(&history) {
                stagnated = true;
                done = true;
            }
            if done || k == m || it == max_iter {
                ritz = hessenberg_ritz(&h_raw, k);
            }
            if done {
                break;
            }
            basis.push(wv.iter().map(|z| z / hn).collect());
        }
        // Back substitution on the rotated Hessenberg.
        let mut yv = vec![zero; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[(i, j)] * yv[j];
            }
            yv[i] = if h[(i, i)].norm() == 0.0 { zero } else { s / h[(i, i)] };
        }
        for (j, yj) in yv.iter().enumerate() {
            axpy(*yj, &basis[j], &mut x);
        }
        if done {
            break 'outer;
        }
    }
    Inner { x, iterations: it, ritz, stagnated }
}

/// Solves `(λI − T)u = f`.
pub fn solve_shifted(
    op: &dyn LinearOperator,
    lambda: Complex64,
    rhs: &[Complex64],
    tol: f64,
    max_iter: usize,
    method: SolveMethod,
) -> Result<SolveReport> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: rhs.len() });
    }
    if !(tol > 0.0) || !lambda.re.is_finite() || !lambda.im.is_finite() {
        return config("tolerance must be positive and lambda finite");
    }
    let hermitian_ok = op.is_hermitian() && lambda.im == 0.0;
    let method = match method {
        SolveMethod::Auto if hermitian_ok => SolveMethod::Minres,
        SolveMethod::Auto => SolveMethod::Gmres,
        SolveMethod::Minres if !hermitian_ok => {
            return config("minres needs a Hermitian operator and a real shift");
        }
        m => m,
    };
    let a = Shifted { op, lambda };
    let fnorm = norm(rhs);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut iterations = 0;
    let mut ritz = (f64::INFINITY, 0.0f64);
    let mut rel = if fnorm == 0.0 { 0.0 } else { 1.0 };
    // Outer refinement on the true residual guards against drift of the
    // recursively updated residual estimate.
    for _ in 0..5 {
        if rel <= tol || iterations >= max_iter {
            break;
        }
        let r = a.residual(&x, rhs);
        let inner_tol = (tol * fnorm / norm(&r)).min(0.5);
        let inner = match method {
            SolveMethod::Minres => minres(&a, &r, inner_tol, max_iter - iterations),
            _ => gmres(&a, &r, inner_tol, max_iter - iterations, GMRES_RESTART),
        };
        for (xi, di) in x.iter_mut().zip(&inner.x) {
            *xi += di;
        }
        iterations += inner.iterations;
        ritz = (ritz.0.min(inner.ritz.0), ritz.1.max(inner.ritz.1));
        rel = norm(&a.residual(&x, rhs)) / fnorm;
        if inner.stagnated {
            break;
        }
    }
    let converged = rel <= tol;
    let near_singular = !converged && ritz.0 <= NEAR_SINGULAR_TOL * ritz.1.max(1.0);
    Ok(SolveReport {
        lambda,
        method,
        iterations,
        relative_residual: rel,
        solution: x,
        converged,
        near_singular,
        min_ritz: ritz.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ewald::{maxwell_lambda_pm, EwaldParams, LambdaPmMethod};
    use crate::kernels::BuiltinKernel;
    use crate::lattice::{
        build_domain, DenseOperator, FiniteSectionOperator, GridConvention, Shape, DEFAULT_DENSE_LIMIT,
    };
    use crate::spectra::{extreme_eigs, EigOptions};
    use crate::stability::{classify, ConvexRegion};
    use crate::Par;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn fft_op(b: BuiltinKernel, n: usize) -> FiniteSectionOperator {
        let k = b.build().unwrap();
        let dom = build_domain(k.dim(), n, &Shape::unit_box(k.dim()), GridConvention::CellCentered).unwrap();
        FiniteSectionOperator::fft(&k, &dom, Par::default()).unwrap()
    }

    fn maxwell3_region() -> ConvexRegion {
        let (lm, lp) = maxwell_lambda_pm(3, LambdaPmMethod::Ewald(EwaldParams::default_for(3)), Par::default()).unwrap();
        ConvexRegion::interval(lm, lp).unwrap()
    }

    #[test]
    fn round_trip_recovers_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let op = fft_op(BuiltinKernel::Sawtooth, 64);
        let w = random_vec(64, &mut rng);
        let lambda = Complex64::new(2.0, 0.0);
        let a = Shifted { op: &op, lambda };
        let mut rhs = vec![Complex64::new(0.0, 0.0); 64];
        a.apply(&w, &mut rhs);
        for method in [SolveMethod::Minres, SolveMethod::Gmres, SolveMethod::Auto] {
            let rep = solve_shifted(&op, lambda, &rhs, 1e-13, 500, method).unwrap();
            assert!(rep.converged, "{method:?}");
            let err = rep.solution.iter().zip(&w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{method:?}: {err}");
        }
        let complex_shift = solve_shifted(&op, Complex64::new(0.3, 1.5), &rhs, 1e-10, 500, SolveMethod::Auto).unwrap();
        assert_eq!(complex_shift.method, SolveMethod::Gmres);
        assert!(complex_shift.converged);
    }

    #[test]
    fn rejects_bad_input() {
        let op = fft_op(BuiltinKernel::Ex4, 4);
        let rhs = vec![Complex64::new(1.0, 0.0); op.dim()];
        assert!(solve_shifted(&op, Complex64::new(2.0, 0.0), &rhs[1..], 1e-10, 10, SolveMethod::Auto).is_err());
        assert!(solve_shifted(&op, Complex64::new(2.0, 0.0), &rhs, 1e-10, 10, SolveMethod::Minres).is_err());
        assert!(solve_shifted(&op, Complex64::new(2.0, 0.0), &rhs, 0.0, 10, SolveMethod::Gmres).is_err());
        assert!(SolveMethod::parse("cg").is_err());
        assert_eq!(SolveMethod::parse("GMRES").unwrap(), SolveMethod::Gmres);
    }

    #[test]
    fn maxwell_outside_region_obeys_resolvent_bound() {
        let region = maxwell3_region();
        let op = fft_op(BuiltinKernel::Maxwell(3), 8);
        let lambda = Complex64::new(1.0, 0.0);
        let bound = classify(lambda, &region).resolvent_bound;
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let f = random_vec(op.dim(), &mut rng);
            let rep = solve_shifted(&op, lambda, &f, DEFAULT_TOL, 500, SolveMethod::Auto).unwrap();
            assert!(rep.converged);
            assert!(rep.iterations <= 200, "{}", rep.iterations);
            assert!(norm(&rep.solution) <= norm(&f) * bound * (1.0 + 1e-6));
        }
    }

    #[test]
    fn iterations_grow_towards_region() {
        let lp = maxwell3_region().real_extent().1;
        let op = fft_op(BuiltinKernel::Maxwell(3), 8);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let f = random_vec(op.dim(), &mut rng);
        let counts: Vec<usize> = (1..=4)
            .map(|k| {
                let lambda = Complex64::new(lp + 10f64.powi(-k), 0.0);
                solve_shifted(&op, lambda, &f, DEFAULT_TOL, 1000, SolveMethod::Auto).unwrap().iterations
            })
            .collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }

    #[test]
    fn shift_at_eigenvalue_is_near_singular() {
        let op = fft_op(BuiltinKernel::Maxwell(2), 12);
        let eig = extreme_eigs(&op, EigOptions { tol: 1e-12, ..EigOptions::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let f = random_vec(op.dim(), &mut rng);
        let rep = solve_shifted(&op, Complex64::new(eig.lambda_max, 0.0), &f, DEFAULT_TOL, 2000, SolveMethod::Auto).unwrap();
        assert!(!rep.converged);
        assert!(rep.near_singular, "min ritz {}", rep.min_ritz);
        let far = solve_shifted(&op, Complex64::new(eig.lambda_max + 0.5, 0.0), &f, DEFAULT_TOL, 2000, SolveMethod::Auto)
            .unwrap();
        assert!(far.converged && !far.near_singular);
    }

    #[test]
    fn agrees_with_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for (b, n) in [(BuiltinKernel::Ex3, 6), (BuiltinKernel::Ex4, 6), (BuiltinKernel::Maxwell(3), 3)] {
            let op = fft_op(b, n);
            let k = op.kernel().clone();
            let dense = FiniteSectionOperator::dense(&k, op.domain(), DEFAULT_DENSE_LIMIT, Par::default()).unwrap();
            let m = dense.to_dense(DEFAULT_DENSE_LIMIT).unwrap();
            let lambda = Complex64::new(1.3, 0.2);
            let f = random_vec(op.dim(), &mut rng);
            let shifted = DMatrix::<Complex64>::identity(m.nrows(), m.nrows()) * lambda - &m;
            let direct = shifted.lu().solve(&nalgebra::DVector::from_column_slice(&f)).unwrap();
            let rep = solve_shifted(&op, lambda, &f, 1e-13, 1000, SolveMethod::Gmres).unwrap();
            let err = rep.solution.iter().zip(direct.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{b}: {err}");
            let dop = DenseOperator::new(m).unwrap();
            let rep2 = solve_shifted(&dop, lambda, &f, 1e-13, 1000, SolveMethod::Gmres).unwrap();
            let err2 = rep2.solution.iter().zip(direct.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err2 < 1e-10, "{b}: {err2}");
        }
    }
}
