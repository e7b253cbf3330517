//! Grid domains `ω^N = {m ∈ Z^d : a + m/N ∈ Ω}` and the finite sections
//! `T^N = (K(m − n))_{m,n ∈ ω^N}` (zero diagonal blocks).
//!
//! Unknowns are ordered point-major: component `i` of the block at the `p`-th
//! grid point (lexicographic order) has index `p·r + i`.

use std::io::{self, Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{config, domain, Error, Result};
use crate::fft::{smooth_size, FftNd};
use crate::kernels::Kernel;
use crate::Par;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default row limit for dense storage (an 8192² complex matrix is 1 GiB).
pub const DEFAULT_DENSE_LIMIT: usize = 8192;

/// Physical domain `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Axis-aligned box `Π [lower_k, upper_k]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Shape {
    pub fn unit_box(d: usize) -> Self {
        Shape::Box {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    /// Ball of diameter 1 centered at `(1/2, …, 1/2)`.
    pub fn unit_ball(d: usize) -> Self {
        Shape::Ball {
            center: vec![0.5; d],
            radius: 0.5,
        }
    }

    fn dim(&self) -> usize {
        match self {
            Shape::Box { lower, .. } => lower.len(),
            Shape::Ball { center, .. } => center.len(),
        }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Box { lower, upper } => (lower.clone(), upper.clone()),
            Shape::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// Membership with boundary slack `eps`: positive admits the boundary,
    /// negative excludes it.
    fn contains(&self, x: &[f64], eps: f64) -> bool {
        match self {
            Shape::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (lo, hi))| *v >= lo - eps && *v <= hi + eps),
            Shape::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                r2.sqrt() <= radius + eps
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Shape::Box { lower, upper } => {
                if lower.len() != upper.len() || lower.is_empty() {
                    return config("box bounds must have equal, nonzero length");
                }
                if lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
                    return config("box lower bounds must be below upper bounds");
                }
            }
            Shape::Ball { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) {
                    return config("ball needs a center and a positive radius");
                }
            }
        }
        Ok(())
    }
}

/// Placement of the grid `a + m/N` relative to `Ω`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GridConvention {
    /// `a = (h/2, …, h/2)`; `N^d` points in the unit box.
    #[default]
    CellCentered,
    /// `a = 0`, points on `∂Ω` included; `(N+1)^d` points in the unit box.
    VertexClosed,
    /// `a = 0`, points on `∂Ω` excluded; `(N−1)^d` points in the unit box.
    VertexOpen,
}

impl GridConvention {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "cell" | "cellcentered" | "centered" => Ok(Self::CellCentered),
            "vertex" | "vertexclosed" | "closed" => Ok(Self::VertexClosed),
            "vertexopen" | "open" => Ok(Self::VertexOpen),
            _ => config(format!("unknown grid convention '{s}'")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::CellCentered => "cell-centered",
            Self::VertexClosed => "vertex-closed",
            Self::VertexOpen => "vertex-open",
        }
    }

    fn offset(&self, d: usize, n: usize) -> Vec<f64> {
        match self {
            Self::CellCentered => vec![0.5 / n as f64; d],
            Self::VertexClosed | Self::VertexOpen => vec![0.0; d],
        }
    }

    fn boundary_slack(&self) -> f64 {
        match self {
            Self::VertexOpen => -1e-12,
            _ => 1e-12,
        }
    }
}

/// The index set `ω^N` with its bounding box.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeDomain {
    d: usize,
    n: usize,
    offset: Vec<f64>,
    /// Lexicographically sorted, flattened with stride `d`.
    indices: Vec<i64>,
    box_min: Vec<i64>,
    box_extent: Vec<usize>,
    /// Row-major occupancy of the bounding box.
    mask: Vec<bool>,
}

/// Enumerates `ω^N` for the given shape and convention.
pub fn build_domain(d: usize, n: usize, shape: &Shape, grid: GridConvention) -> Result<LatticeDomain> {
    build_domain_with_offset(d, n, shape, &grid.offset(d, n), grid.boundary_slack())
}

/// Enumerates `ω^N` for an explicit offset `a`; `boundary_slack > 0` admits
/// points on `∂Ω`, `< 0` excludes them.
pub fn build_domain_with_offset(
    d: usize,
    n: usize,
    shape: &Shape,
    offset: &[f64],
    boundary_slack: f64,
) -> Result<LatticeDomain> {
    if n < 1 {
        return config("refinement N must be >= 1");
    }
    if d < 1 || shape.dim() != d || offset.len() != d {
        return config(format!("dimension mismatch: d = {d}, shape/offset disagree"));
    }
    shape.validate()?;
    let nf = n as f64;
    let (lo, hi) = shape.bounds();
    let lo_m: Vec<i64> = (0..d).map(|k| ((lo[k] - offset[k]) * nf - 1e-9).ceil() as i64).collect();
    let hi_m: Vec<i64> = (0..d).map(|k| ((hi[k] - offset[k]) * nf + 1e-9).floor() as i64).collect();
    if lo_m.iter().zip(&hi_m).any(|(a, b)| a > b) {
        return Err(Error::EmptyDomain);
    }
    let span: Vec<usize> = lo_m.iter().zip(&hi_m).map(|(a, b)| (b - a + 1) as usize).collect();
    let total: usize = span.iter().product();
    let mut indices = Vec::new();
    let mut m = lo_m.clone();
    let mut x = vec![0.0; d];
    for _ in 0..total {
        for k in 0..d {
            x[k] = offset[k] + m[k] as f64 / nf;
        }
        if shape.contains(&x, boundary_slack) {
            indices.extend_from_slice(&m);
        }
        for k in (0..d).rev() {
            if m[k] < hi_m[k] {
                m[k] += 1;
                break;
            }
            m[k] = lo_m[k];
        }
    }
    if indices.is_empty() {
        return Err(Error::EmptyDomain);
    }
    Ok(LatticeDomain::from_indices(d, n, offset.to_vec(), indices))
}

impl LatticeDomain {
    fn from_indices(d: usize, n: usize, offset: Vec<f64>, indices: Vec<i64>) -> Self {
        let mut box_min = vec![i64::MAX; d];
        let mut box_max = vec![i64::MIN; d];
        for m in indices.chunks_exact(d) {
            for k in 0..d {
                box_min[k] = box_min[k].min(m[k]);
                box_max[k] = box_max[k].max(m[k]);
            }
        }
        let box_extent: Vec<usize> = (0..d).map(|k| (box_max[k] - box_min[k] + 1) as usize).collect();
        let mut dom = Self {
            d,
            n,
            offset,
            indices,
            box_min,
            box_extent,
            mask: Vec::new(),
        };
        let mut mask = vec![false; dom.box_extent.iter().product()];
        for p in 0..dom.len() {
            mask[dom.box_position(p)] = true;
        }
        dom.mask = mask;
        dom
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn refinement(&self) -> usize {
        self.n
    }

    pub fn meshwidth(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Number of grid points `|ω^N|`.
    pub fn len(&self) -> usize {
        self.indices.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index(&self, p: usize) -> &[i64] {
        &self.indices[p * self.d..(p + 1) * self.d]
    }

    pub fn indices(&self) -> impl Iterator<Item = &[i64]> {
        self.indices.chunks_exact(self.d)
    }

    /// Physical point `x_m = a + m/N` of the `p`-th index.
    pub fn point(&self, p: usize) -> Vec<f64> {
        self.index(p)
            .iter()
            .zip(&self.offset)
            .map(|(&m, a)| a + m as f64 / self.n as f64)
            .collect()
    }

    pub fn bounding_box(&self) -> (&[i64], &[usize]) {
        (&self.box_min, &self.box_extent)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Row-major position of the `p`-th index inside the bounding box.
    fn box_position(&self, p: usize) -> usize {
        let m = self.index(p);
        let mut pos = 0;
        for k in 0..self.d {
            pos = pos * self.box_extent[k] + (m[k] - self.box_min[k]) as usize;
        }
        pos
    }
}

/// Matrix-free linear operator on `C^n`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; slices have length [`dim`](Self::dim).
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);

    /// `y = A^H x`.
    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]);

    fn is_hermitian(&self) -> bool;

    /// The explicit matrix, when the operator stores one.
    fn dense(&self) -> Option<&DMatrix<Complex64>> {
        None
    }
}

/// An explicit matrix viewed as a [`LinearOperator`].
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: DMatrix<Complex64>,
    hermitian: bool,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return config("dense operator must be square");
        }
        let scale = matrix.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let hermitian = (&matrix - matrix.adjoint()).iter().all(|v| v.norm() <= 1e-14 * scale);
        Ok(Self { matrix, hermitian })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

fn dense_apply(m: &DMatrix<Complex64>, x: &[Complex64], y: &mut [Complex64]) {
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = m.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

fn dense_apply_adjoint(m: &DMatrix<Complex64>, x: &[Complex64], y: &mut [Complex64]) {
    for (j, yj) in y.iter_mut().enumerate() {
        *yj = m.column(j).iter().zip(x).map(|(a, b)| a.conj() * b).sum();
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        dense_apply(&self.matrix, x, y);
    }

    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]) {
        dense_apply_adjoint(&self.matrix, x, y);
    }

    fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    fn dense(&self) -> Option<&DMatrix<Complex64>> {
        Some(&self.matrix)
    }
}

/// Storage mode of a finite section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Dense,
    Fft,
}

#[derive(Clone, Debug)]
struct Circulant {
    fft: FftNd,
    dims: Vec<usize>,
    /// Spectra of the `r²` kernel components, each of length `P`.
    spectra: Vec<Vec<Complex64>>,
    /// Circulant positions of the domain points.
    positions: Vec<usize>,
}

#[derive(Clone, Debug)]
enum Repr {
    Dense(DMatrix<Complex64>),
    Fft(Circulant),
}

/// The finite section `T^N` of the infinite (block) Toeplitz matrix of a kernel.
#[derive(Clone, Debug)]
pub struct FiniteSectionOperator {
    kernel: Kernel,
    domain: LatticeDomain,
    repr: Repr,
}

impl FiniteSectionOperator {
    /// Dense assembly, refusing more than `limit` rows.
    pub fn dense(kernel: &Kernel, domain: &LatticeDomain, limit: usize, par: Par) -> Result<Self> {
        check_dims(kernel, domain)?;
        let r = kernel.block();
        let rows = r * domain.len();
        if rows > limit {
            return Err(Error::SizeGuard { rows, limit });
        }
        let hermitian = kernel.is_hermitian();
        let d = domain.dim();
        let npts = domain.len();
        // Row blocks are independent; for Hermitian kernels only q ≥ p is
        // evaluated and mirrored afterwards.
        let row_blocks: Vec<Vec<Complex64>> = par.map(npts, |p| {
            let mut out = vec![ZERO; r * rows];
            let mut diff = vec![0i64; d];
            let mut block = vec![ZERO; r * r];
            let start = if hermitian { p } else { 0 };
            let mp = domain.index(p);
            for q in start..npts {
                if q == p {
                    continue;
                }
                for (k, (a, b)) in mp.iter().zip(domain.index(q)).enumerate() {
                    diff[k] = a - b;
                }
                kernel.lattice_coefficient_into(&diff, &mut block);
                for i in 0..r {
                    for j in 0..r {
                        out[i * rows + q * r + j] = block[i * r + j];
                    }
                }
            }
            out
        });
        let mut m = DMatrix::from_element(rows, rows, ZERO);
        for (p, blk) in row_blocks.iter().enumerate() {
            for i in 0..r {
                for c in 0..rows {
                    m[(p * r + i, c)] = blk[i * rows + c];
                }
            }
        }
        if hermitian {
            for a in 0..rows {
                for b in 0..a {
                    if b / r != a / r {
                        m[(a, b)] = m[(b, a)].conj();
                    }
                }
            }
        }
        Ok(Self {
            kernel: kernel.clone(),
            domain: domain.clone(),
            repr: Repr::Dense(m),
        })
    }

    /// FFT mode: circulant embedding of the difference box.
    pub fn fft(kernel: &Kernel, domain: &LatticeDomain, par: Par) -> Result<Self> {
        check_dims(kernel, domain)?;
        let d = domain.dim();
        let r = kernel.block();
        let (_, extent) = domain.bounding_box();
        let dims: Vec<usize> = extent.iter().map(|&l| smooth_size(2 * l - 1)).collect();
        let total: usize = dims.iter().product();
        let fft = FftNd::new(&dims);
        // Kernel values at every circulant position: offset δ with
        // |δ_k| ≤ L_k − 1 sits at δ mod P_k.
        let tensors: Vec<Vec<Complex64>> = par.map(total, |pos| {
            let mut rest = pos;
            let mut delta = vec![0i64; d];
            let mut inside = true;
            for k in (0..d).rev() {
                let c = rest % dims[k];
                rest /= dims[k];
                let l = extent[k] as i64;
                let c = c as i64;
                delta[k] = if c < l {
                    c
                } else if c > dims[k] as i64 - l {
                    c - dims[k] as i64
                } else {
                    inside = false;
                    0
                };
            }
            let mut block = vec![ZERO; r * r];
            if inside {
                kernel.lattice_coefficient_into(&delta, &mut block);
            }
            block
        });
        let spectra: Vec<Vec<Complex64>> = par.map(r * r, |c| {
            let mut v: Vec<Complex64> = tensors.iter().map(|b| b[c]).collect();
            fft.forward(&mut v);
            let scale = 1.0 / total as f64;
            v.iter_mut().for_each(|z| *z *= scale);
            v
        });
        let (box_min, _) = domain.bounding_box();
        let positions = domain
            .indices()
            .map(|m| {
                let mut pos = 0;
                for k in 0..d {
                    pos = pos * dims[k] + (m[k] - box_min[k]) as usize;
                }
                pos
            })
            .collect();
        Ok(Self {
            kernel: kernel.clone(),
            domain: domain.clone(),
            repr: Repr::Fft(Circulant {
                fft,
                dims,
                spectra,
                positions,
            }),
        })
    }

    /// Dense below `limit` rows, FFT otherwise.
    pub fn auto(kernel: &Kernel, domain: &LatticeDomain, limit: usize, par: Par) -> Result<Self> {
        if kernel.block() * domain.len() <= limit.min(2048) {
            Self::dense(kernel, domain, limit, par)
        } else {
            Self::fft(kernel, domain, par)
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    pub fn mode(&self) -> Mode {
        match self.repr {
            Repr::Dense(_) => Mode::Dense,
            Repr::Fft(_) => Mode::Fft,
        }
    }

    /// Padded circulant grid, FFT mode only.
    pub fn circulant_dims(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::Fft(c) => Some(&c.dims),
            Repr::Dense(_) => None,
        }
    }

    /// `T^N u` with a length check.
    pub fn matvec(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(u)?;
        let mut y = vec![ZERO; u.len()];
        self.apply(u, &mut y);
        Ok(y)
    }

    /// `⟨u, T^N u⟩ / ⟨u, u⟩`.
    pub fn rayleigh(&self, u: &[Complex64]) -> Result<Complex64> {
        let tu = self.matvec(u)?;
        let norm2: f64 = u.iter().map(|v| v.norm_sqr()).sum();
        if norm2 == 0.0 {
            return domain("Rayleigh quotient of the zero vector");
        }
        let num: Complex64 = u.iter().zip(&tu).map(|(a, b)| a.conj() * b).sum();
        Ok(num / norm2)
    }

    /// The explicit matrix (assembled directly in FFT mode, within `limit`).
    pub fn to_dense(&self, limit: usize) -> Result<DMatrix<Complex64>> {
        match &self.repr {
            Repr::Dense(m) => Ok(m.clone()),
            Repr::Fft(_) => match Self::dense(&self.kernel, &self.domain, limit, Par::default())?.repr {
                Repr::Dense(m) => Ok(m),
                Repr::Fft(_) => unreachable!(),
            },
        }
    }

    fn check_len(&self, u: &[Complex64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        Ok(())
    }

    fn circulant_apply(&self, c: &Circulant, x: &[Complex64], y: &mut [Complex64], adjoint: bool) {
        let r = self.kernel.block();
        let total = c.fft.len();
        let inputs: Vec<Vec<Complex64>> = (0..r)
            .map(|j| {
                let mut buf = vec![ZERO; total];
                for (p, &pos) in c.positions.iter().enumerate() {
                    buf[pos] = x[p * r + j];
                }
                c.fft.forward(&mut buf);
                buf
            })
            .collect();
        let mut acc = vec![ZERO; total];
        for i in 0..r {
            acc.fill(ZERO);
            for (j, input) in inputs.iter().enumerate() {
                // The adjoint's (i, j) spectrum is the conjugate of the (j, i) one.
                if adjoint {
                    let s = &c.spectra[j * r + i];
                    for ((a, sv), uv) in acc.iter_mut().zip(s).zip(input) {
                        *a += sv.conj() * uv;
                    }
                } else {
                    let s = &c.spectra[i * r + j];
                    for ((a, sv), uv) in acc.iter_mut().zip(s).zip(input) {
                        *a += sv * uv;
                    }
                }
            }
            c.fft.inverse(&mut acc);
            for (p, &pos) in c.positions.iter().enumerate() {
                y[p * r + i] = acc[pos];
            }
        }
    }
}

fn check_dims(kernel: &Kernel, domain: &LatticeDomain) -> Result<()> {
    if kernel.dim() != domain.dim() {
        return config(format!(
            "kernel dimension {} differs from domain dimension {}",
            kernel.dim(),
            domain.dim()
        ));
    }
    Ok(())
}

impl LinearOperator for FiniteSectionOperator {
    fn dim(&self) -> usize {
        self.kernel.block() * self.domain.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        match &self.repr {
            Repr::Dense(m) => dense_apply(m, x, y),
            Repr::Fft(c) => self.circulant_apply(c, x, y, false),
        }
    }

    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]) {
        match &self.repr {
            Repr::Dense(m) => dense_apply_adjoint(m, x, y),
            Repr::Fft(c) => self.circulant_apply(c, x, y, true),
        }
    }

    fn is_hermitian(&self) -> bool {
        self.kernel.is_hermitian()
    }

    fn dense(&self) -> Option<&DMatrix<Complex64>> {
        match &self.repr {
            Repr::Dense(m) => Some(m),
            Repr::Fft(_) => None,
        }
    }
}

/// File magic of the binary matrix dump.
pub const DUMP_MAGIC: &[u8; 8] = b"DDSTABM1";

/// Writes `magic, d, r, N (u32 each), rows, cols (u64 each)` followed by the
/// entries row-major as little-endian `(re, im)` f64 pairs.
pub fn write_dense_binary(
    w: &mut impl Write,
    matrix: &DMatrix<Complex64>,
    d: usize,
    r: usize,
    n: usize,
) -> io::Result<()> {
    w.write_all(DUMP_MAGIC)?;
    for v in [d, r, n] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&(matrix.nrows() as u64).to_le_bytes())?;
    w.write_all(&(matrix.ncols() as u64).to_le_bytes())?;
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            let z = matrix[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Header of a binary dump.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DumpHeader {
    pub d: usize,
    pub r: usize,
    pub n: usize,
}

/// Reads a matrix written by [`write_dense_binary`].
pub fn read_dense_binary(rd: &mut impl Read) -> Result<(DumpHeader, DMatrix<Complex64>)> {
    let mut magic = [0u8; 8];
    rd.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return config("not a matrix dump (bad magic)");
    }
    let mut u32buf = [0u8; 4];
    let mut header = [0usize; 3];
    for h in header.iter_mut() {
        rd.read_exact(&mut u32buf)?;
        *h = u32::from_le_bytes(u32buf) as usize;
    }
    let mut u64buf = [0u8; 8];
    rd.read_exact(&mut u64buf)?;
    let rows = u64::from_le_bytes(u64buf) as usize;
    rd.read_exact(&mut u64buf)?;
    let cols = u64::from_le_bytes(u64buf) as usize;
    let mut m = DMatrix::from_element(rows, cols, ZERO);
    let mut f = [0u8; 8];
    for i in 0..rows {
        for j in 0..cols {
            rd.read_exact(&mut f)?;
            let re = f64::from_le_bytes(f);
            rd.read_exact(&mut f)?;
            let im = f64::from_le_bytes(f);
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok((
        DumpHeader {
            d: header[0],
            r: header[1],
            n: header[2],
        },
        m,
    ))
}

/// One line per row: `re,im,re,im,…`.
pub fn write_dense_csv(w: &mut impl Write, matrix: &DMatrix<Complex64>) -> io::Result<()> {
    for i in 0..matrix.nrows() {
        let line: Vec<String> = (0..matrix.ncols())
            .map(|j| {
                let z = matrix[(i, j)];
                format!("{:e},{:e}", z.re, z.im)
            })
            .collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
