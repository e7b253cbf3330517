//! Stability regions, verdicts for spectral parameters, and the
//! Clausius–Mossotti map between `λ` and the relative permittivity.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{config, domain, Result};
use crate::ewald::{
    hermitian_eigenvalues, maxwell_lambda_pm, scan_points, symmetric_grid, EwaldParams, EwaldSymbol,
    LambdaPmMethod, SymbolScan,
};
use crate::kernels::{sawtooth_symbol, HomogeneousKernel, Kernel};
use crate::spectra::convex_hull;
use crate::Par;

/// Distances below this count as "on the boundary", which is reported as inside.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// Compact convex set in `C`: a real interval or a convex polygon.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexRegion {
    Interval { lo: f64, hi: f64 },
    /// Counterclockwise vertices.
    Polygon(Vec<Complex64>),
}

impl ConvexRegion {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return config(format!("interval bounds out of order: [{lo}, {hi}]"));
        }
        Ok(ConvexRegion::Interval { lo, hi })
    }

    /// Convex hull of the given points.
    pub fn hull_of(points: &[Complex64]) -> Result<Self> {
        let h = convex_hull(points);
        if h.is_empty() {
            return config("convex hull of an empty point set");
        }
        Ok(ConvexRegion::Polygon(h))
    }

    /// Euclidean distance from `z`; zero inside or on the boundary.
    pub fn distance(&self, z: Complex64) -> f64 {
        match self {
            ConvexRegion::Interval { lo, hi } => {
                let dx = if z.re < *lo {
                    lo - z.re
                } else if z.re > *hi {
                    z.re - hi
                } else {
                    0.0
                };
                dx.hypot(z.im)
            }
            ConvexRegion::Polygon(v) => polygon_distance(v, z),
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.distance(z) < BOUNDARY_EPS
    }

    /// `(min Re, max Re)` over the region.
    pub fn real_extent(&self) -> (f64, f64) {
        match self {
            ConvexRegion::Interval { lo, hi } => (*lo, *hi),
            ConvexRegion::Polygon(v) => v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), z| {
                (a.min(z.re), b.max(z.re))
            }),
        }
    }

    /// Points whose hull is the region (interval end points or vertices).
    pub fn vertices(&self) -> Vec<Complex64> {
        match self {
            ConvexRegion::Interval { lo, hi } => vec![Complex64::new(*lo, 0.0), Complex64::new(*hi, 0.0)],
            ConvexRegion::Polygon(v) => v.clone(),
        }
    }

    /// Largest distance from a vertex of `self` to `other`; zero iff
    /// `self ⊆ other` up to the polygonal approximation.
    pub fn excess_over(&self, other: &ConvexRegion) -> f64 {
        self.vertices().iter().map(|&z| other.distance(z)).fold(0.0, f64::max)
    }

    /// Symmetric Hausdorff distance between the two regions.
    pub fn hausdorff(&self, other: &ConvexRegion) -> f64 {
        self.excess_over(other).max(other.excess_over(self))
    }
}

fn segment_distance(a: Complex64, b: Complex64, z: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

fn polygon_distance(v: &[Complex64], z: Complex64) -> f64 {
    match v.len() {
        0 => f64::INFINITY,
        1 => (z - v[0]).norm(),
        2 => segment_distance(v[0], v[1], z),
        n => {
            let inside = (0..n).all(|i| {
                let a = v[i];
                let b = v[(i + 1) % n];
                (b.re - a.re) * (z.im - a.im) - (b.im - a.im) * (z.re - a.re) >= 0.0
            });
            if inside {
                return 0.0;
            }
            (0..n)
                .map(|i| segment_distance(v[i], v[(i + 1) % n], z))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Classification of a spectral parameter against a stability region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub lambda: Complex64,
    pub in_region: bool,
    pub distance: f64,
    /// `1/dist(λ, 𝒞)` bound on `‖(λI − T^N)^{-1}‖`; infinite inside.
    pub resolvent_bound: f64,
}

pub fn classify(lambda: Complex64, region: &ConvexRegion) -> StabilityVerdict {
    let distance = region.distance(lambda);
    let in_region = distance < BOUNDARY_EPS;
    StabilityVerdict {
        lambda,
        in_region,
        distance,
        resolvent_bound: if in_region { f64::INFINITY } else { 1.0 / distance },
    }
}

/// Quasi-uniform directions on `S^{d-1}` including the coordinate axes and
/// the diagonals of the coordinate planes. Flattened with stride `d`.
fn sphere_directions(d: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    match d {
        1 => out.extend([1.0, -1.0]),
        2 => {
            let n = n.div_ceil(8) * 8;
            for j in 0..n {
                let t = 2.0 * PI * j as f64 / n as f64;
                out.extend([t.cos(), t.sin()]);
            }
        }
        _ => {
            // Lat-long grid on the first three axes.
            let n = n.div_ceil(4) * 4;
            for i in 0..=n / 2 {
                let theta = PI * i as f64 / (n / 2) as f64;
                for j in 0..n {
                    let phi = 2.0 * PI * j as f64 / n as f64;
                    let mut x = vec![0.0; d];
                    x[0] = theta.sin() * phi.cos();
                    x[1] = theta.sin() * phi.sin();
                    x[2] = theta.cos();
                    out.extend(x);
                }
            }
            for a in 0..d {
                for b in 0..d {
                    for s in [1.0, -1.0] {
                        let mut x = vec![0.0; d];
                        x[a] = 1.0;
                        if a != b {
                            x[a] = std::f64::consts::FRAC_1_SQRT_2;
                            x[b] = s * std::f64::consts::FRAC_1_SQRT_2;
                        }
                        out.extend(x);
                    }
                }
            }
        }
    }
    out
}

/// Values of `K̂` on the sphere: eigenvalues (Hermitian) or complex values.
fn symbol_hat_samples(kernel: &HomogeneousKernel, sphere_grid_n: usize) -> Result<Vec<Complex64>> {
    let d = kernel.dim();
    let dirs = sphere_directions(d, sphere_grid_n);
    let mut out = Vec::new();
    for xi in dirs.chunks_exact(d) {
        if xi.iter().all(|&v| v == 0.0) {
            continue;
        }
        let s = kernel.symbol_hat(xi)?;
        if kernel.is_hermitian() {
            out.extend(hermitian_eigenvalues(&s).into_iter().map(|x| Complex64::new(x, 0.0)));
        } else if kernel.block() == 1 {
            out.push(s[(0, 0)]);
        } else {
            return config("non-Hermitian block kernels are not supported");
        }
    }
    Ok(out)
}

fn region_from(samples: &[Complex64], hermitian: bool) -> Result<ConvexRegion> {
    if hermitian {
        let lo = samples.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        ConvexRegion::interval(lo, hi)
    } else {
        ConvexRegion::hull_of(samples)
    }
}

/// `W(A)`: convex hull of the range of `K̂` sampled on the unit sphere.
pub fn operator_range_wa(kernel: &Kernel, sphere_grid_n: usize) -> Result<ConvexRegion> {
    if sphere_grid_n < 8 {
        return config("sphere grid needs at least 8 points per circle");
    }
    match kernel {
        // The finite Hilbert transform has symbol sign ξ.
        Kernel::Sawtooth(_) => ConvexRegion::interval(-1.0, 1.0),
        Kernel::Homogeneous(k) => region_from(&symbol_hat_samples(k, sphere_grid_n)?, k.is_hermitian()),
    }
}

/// Options for [`numerical_range_wt`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeOptions {
    pub params: EwaldParams,
    /// Points per axis of the tensor grid on `Q`.
    pub grid_n: usize,
    /// Points per line on `∂Q ∩ {coordinate planes}` (`d = 3`).
    pub line_n: usize,
    pub sphere_grid_n: usize,
}

impl RangeOptions {
    /// Grid 501 per axis for `d ≤ 2`, 101 for `d = 3`; lines at 10× resolution.
    pub fn default_for(d: usize) -> Self {
        let grid_n = if d <= 2 { 501 } else { 101 };
        Self {
            params: EwaldParams::default_for(d),
            grid_n,
            line_n: 10 * grid_n,
            sphere_grid_n: 64,
        }
    }
}

/// Points `τ` with `τ_j = ±π`, `τ_k = 0` and the remaining coordinate free
/// (`d = 3` only), flattened with stride 3.
fn boundary_plane_lines(line_n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let t = symmetric_grid(line_n.max(2));
    for j in 0..3 {
        for k in 0..3 {
            if j == k {
                continue;
            }
            let free = 3 - j - k;
            for s in [PI, -PI] {
                for &y in &t {
                    let mut p = [0.0; 3];
                    p[j] = s;
                    p[free] = y;
                    out.extend(p);
                }
            }
        }
    }
    out
}

/// The stability region `𝒞`: closed convex hull of the numerical range of
/// `F(τ)` over `Q`, from grid samples (plus boundary-line refinement in
/// `d = 3`) together with the values of `K̂`, which `F` approaches near `0`.
pub fn numerical_range_wt(kernel: &Kernel, opts: RangeOptions, par: Par) -> Result<ConvexRegion> {
    if opts.grid_n < 8 {
        return config("grid_n must be >= 8");
    }
    match kernel {
        Kernel::Sawtooth(_) => {
            let mut lo: f64 = -1.0;
            let mut hi: f64 = 1.0;
            for t in symmetric_grid(opts.grid_n) {
                let v = sawtooth_symbol(t.clamp(-PI, PI))?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            ConvexRegion::interval(lo, hi)
        }
        Kernel::Homogeneous(k) => {
            let ev = EwaldSymbol::new(k, opts.params)?;
            let scan = crate::ewald::symbol_range_scan(k, opts.params, opts.grid_n, par)?;
            let mut samples = symbol_hat_samples(k, opts.sphere_grid_n)?;
            let mut absorb = |s: &SymbolScan| {
                if k.is_hermitian() {
                    samples.push(Complex64::new(s.min_eig, 0.0));
                    samples.push(Complex64::new(s.max_eig, 0.0));
                } else {
                    samples.extend(convex_hull(&s.samples));
                }
            };
            absorb(&scan);
            if k.dim() == 3 && opts.line_n >= 2 {
                absorb(&scan_points(&ev, &boundary_plane_lines(opts.line_n), par)?);
            }
            region_from(&samples, k.is_hermitian())
        }
    }
}

/// Forward Clausius–Mossotti map `λ = (d − 1 + ε)/(d(1 − ε))`.
pub fn clausius_mossotti(eps_r: Complex64, d: usize) -> Result<Complex64> {
    if d < 1 {
        return config("dimension must be positive");
    }
    if (eps_r - 1.0).norm() == 0.0 {
        return domain("eps_r = 1 is a pole of the Clausius-Mossotti map");
    }
    let df = d as f64;
    Ok((eps_r + (df - 1.0)) / ((Complex64::new(1.0, 0.0) - eps_r) * df))
}

/// Inverse map `ε = (dλ − d + 1)/(1 + dλ)`.
pub fn lambda_to_eps(lambda: Complex64, d: usize) -> Result<Complex64> {
    if d < 1 {
        return config("dimension must be positive");
    }
    let df = d as f64;
    let den = lambda * df + 1.0;
    if den.norm() == 0.0 {
        return domain(format!("lambda = -1/{d} is a pole of the inverse map"));
    }
    Ok((lambda * df - df + 1.0) / den)
}

/// Permittivity bands where the integral equation is well posed but the
/// delta-delta scheme is not stable, for the Maxwell kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct PermittivityReport {
    pub d: usize,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// `[−1/d, 1 − 1/d]`.
    pub operator_range: (f64, f64),
    pub overshoot: f64,
    /// `lambda_to_eps(Λ₊)`.
    pub eps_min: f64,
    /// `lambda_to_eps(Λ₋)`.
    pub eps_max: f64,
    /// `(Λ₋, −1/d)` and `(1 − 1/d, Λ₊)`.
    pub unstable_lambda_bands: [(f64, f64); 2],
    /// `(0, ε_min]` and `[ε_max, ∞)`.
    pub unstable_eps_bands: [(f64, f64); 2],
}

pub fn permittivity_stability_report(d: usize, params: EwaldParams, par: Par) -> Result<PermittivityReport> {
    let (lm, lp) = maxwell_lambda_pm(d, LambdaPmMethod::Ewald(params), par)?;
    let df = d as f64;
    let eps_min = lambda_to_eps(Complex64::new(lp, 0.0), d)?.re;
    let eps_max = lambda_to_eps(Complex64::new(lm, 0.0), d)?.re;
    Ok(PermittivityReport {
        d,
        lambda_minus: lm,
        lambda_plus: lp,
        operator_range: (-1.0 / df, 1.0 - 1.0 / df),
        overshoot: lp - lm,
        eps_min,
        eps_max,
        unstable_lambda_bands: [(lm, -1.0 / df), (1.0 - 1.0 / df, lp)],
        unstable_eps_bands: [(0.0, eps_min), (eps_max, f64::INFINITY)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::BuiltinKernel;
    use crate::lattice::{build_domain, FiniteSectionOperator, GridConvention, Shape, DEFAULT_DENSE_LIMIT};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernel(b: BuiltinKernel) -> Kernel {
        b.build().unwrap()
    }

    fn quick(d: usize) -> RangeOptions {
        let grid_n = if d <= 2 { 101 } else { 21 };
        RangeOptions {
            grid_n,
            line_n: 201,
            ..RangeOptions::default_for(d)
        }
    }

    #[test]
    fn operator_ranges() {
        let ex2 = operator_range_wa(&kernel(BuiltinKernel::Ex2), 64).unwrap();
        assert!(ex2.hausdorff(&ConvexRegion::interval(-0.5, 0.5).unwrap()) < 1e-15);
        for d in [2usize, 3] {
            let w = operator_range_wa(&kernel(BuiltinKernel::Maxwell(d)), 32).unwrap();
            let (lo, hi) = w.real_extent();
            assert!((lo + 1.0 / d as f64).abs() < 1e-14 && (hi - 1.0 + 1.0 / d as f64).abs() < 1e-14);
        }
        let ex4 = operator_range_wa(&kernel(BuiltinKernel::Ex4), 64).unwrap();
        match &ex4 {
            ConvexRegion::Polygon(v) => {
                assert!(v.len() >= 32);
                assert!(v.iter().all(|z| (z.norm() - 1.0).abs() < 1e-6));
            }
            _ => panic!("expected a polygon"),
        }
        assert!(operator_range_wa(&kernel(BuiltinKernel::Ex2), 4).is_err());
    }

    #[test]
    fn symbol_ranges() {
        let ex2 = numerical_range_wt(&kernel(BuiltinKernel::Ex2), quick(2), Par::default()).unwrap();
        assert!(ex2.hausdorff(&ConvexRegion::interval(-0.5, 0.5).unwrap()) < 1e-8);
        let saw = numerical_range_wt(&kernel(BuiltinKernel::Sawtooth), quick(1), Par::default()).unwrap();
        assert_eq!(saw, ConvexRegion::Interval { lo: -1.0, hi: 1.0 });
        let mx = numerical_range_wt(&kernel(BuiltinKernel::Maxwell(3)), quick(3), Par::default()).unwrap();
        let (lo, hi) = mx.real_extent();
        assert!((lo + 0.4260241507272727).abs() < 1e-10);
        assert!((hi - 0.7709022227747195).abs() < 1e-10);
    }

    #[test]
    fn operator_range_is_inside_symbol_range_with_overshoot() {
        for b in BuiltinKernel::all() {
            let k = kernel(b);
            let wa = operator_range_wa(&k, 64).unwrap();
            let wt = numerical_range_wt(&k, quick(k.dim()), Par::default()).unwrap();
            assert!(wa.excess_over(&wt) <= 1e-8, "{b}");
            match b {
                BuiltinKernel::Ex2 | BuiltinKernel::Sawtooth => assert!(wa.hausdorff(&wt) <= 1e-8, "{b}"),
                BuiltinKernel::Ex3 | BuiltinKernel::Maxwell(_) => {
                    assert!(wt.real_extent().1 - wa.real_extent().1 >= 0.04, "{b}")
                }
                BuiltinKernel::Ex4 => {}
            }
        }
    }

    #[test]
    fn verdicts() {
        let c = ConvexRegion::interval(-0.4260241507272727, 0.7709022227747195).unwrap();
        let v = classify(Complex64::new(1.0, 0.0), &c);
        assert!(!v.in_region);
        assert!((v.distance - 0.2290977772252805).abs() < 1e-15);
        assert!((v.resolvent_bound - 4.365).abs() < 1e-3);
        assert!(classify(Complex64::new(0.7, 0.0), &c).in_region);
        let saw = ConvexRegion::interval(-1.0, 1.0).unwrap();
        let v = classify(Complex64::new(2.0, 0.0), &saw);
        assert_eq!((v.distance, v.resolvent_bound), (1.0, 1.0));
        let edge = classify(Complex64::new(1.0 + 1e-13, 0.0), &saw);
        assert!(edge.in_region);
        assert!(ConvexRegion::interval(1.0, 0.0).is_err());
    }

    #[test]
    fn polygon_distances() {
        let sq = ConvexRegion::hull_of(&[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(sq.distance(Complex64::new(0.5, 0.5)), 0.0);
        assert!((sq.distance(Complex64::new(2.0, 0.5)) - 1.0).abs() < 1e-15);
        assert!((sq.distance(Complex64::new(2.0, 2.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clausius_mossotti_map() {
        assert!((clausius_mossotti(Complex64::new(0.0, 0.0), 3).unwrap() - 2.0 / 3.0).norm() < 1e-16);
        assert!(clausius_mossotti(Complex64::new(1.0, 0.0), 3).is_err());
        assert!(lambda_to_eps(Complex64::new(-1.0 / 3.0, 0.0), 3).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let e = Complex64::new(rng.random_range(-5.0..20.0), rng.random_range(-5.0..5.0));
            let back = lambda_to_eps(clausius_mossotti(e, 3).unwrap(), 3).unwrap();
            assert!((back - e).norm() <= 1e-14 * e.norm().max(1.0));
        }
    }

    #[test]
    fn permittivity_report() {
        let r = permittivity_stability_report(3, EwaldParams::default_for(3), Par::default()).unwrap();
        assert!((r.eps_min - 0.0943961).abs() < 1e-6);
        assert!((r.eps_max - 11.788555).abs() < 1e-6);
        assert!((r.overshoot - 1.1969263735019922).abs() < 1e-9);
        let r2 = permittivity_stability_report(2, EwaldParams::default_for(2), Par::default()).unwrap();
        assert!((r2.unstable_lambda_bands[0].0 + 0.5471).abs() < 1e-4);
        assert_eq!(r2.unstable_lambda_bands[0].1, -0.5);
        assert_eq!(r2.unstable_lambda_bands[1].0, 0.5);
        assert!((r2.unstable_lambda_bands[1].1 - 0.5471).abs() < 1e-4);
    }

    fn smallest_singular_value(m: &DMatrix<Complex64>) -> f64 {
        m.clone().svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn empirical_resolvent_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for b in [BuiltinKernel::Maxwell(2), BuiltinKernel::Ex4, BuiltinKernel::Sawtooth] {
            let k = kernel(b);
            let region = numerical_range_wt(&k, quick(k.dim()), Par::default()).unwrap();
            let n = if k.dim() == 1 { 24 } else { 5 };
            let dom = build_domain(k.dim(), n, &Shape::unit_box(k.dim()), GridConvention::CellCentered).unwrap();
            let t = FiniteSectionOperator::dense(&k, &dom, DEFAULT_DENSE_LIMIT, Par::default()).unwrap();
            let m = t.to_dense(DEFAULT_DENSE_LIMIT).unwrap();
            let mut tested = 0;
            while tested < 10 {
                let z = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let v = classify(z, &region);
                if v.in_region {
                    continue;
                }
                let shifted = DMatrix::<Complex64>::identity(m.nrows(), m.nrows()) * z - &m;
                let norm_inv = 1.0 / smallest_singular_value(&shifted);
                assert!(norm_inv <= v.resolvent_bound + 1e-8, "{b} at {z}");
                tested += 1;
            }
        }
    }
}
