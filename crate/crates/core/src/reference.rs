//! Published reference values for the built-in kernels. The lattice tables
//! use the [`VertexClosed`](crate::lattice::GridConvention::VertexClosed)
//! grid on the unit square or cube.

/// `Λ₀ = Γ(1/4)⁴/(32π²)`.
pub const LAMBDA0: f64 = 0.5471099038066192;

/// Extreme eigenvalues of the Maxwell symbol in `d = 3`: `(Λ₋, Λ₊)`.
pub const MAXWELL3_LAMBDA_PM: (f64, f64) = (-0.4260241507272727, 0.7709022227747195);

/// Permittivity range of stable DDA schemes in `d = 3`: `(ε_min, ε_max)`.
pub const MAXWELL3_EPS_MIN_MAX: (f64, f64) = (0.0943961, 11.788555);

/// `Λ₊ − Λ₋` for the Maxwell symbol in `d = 3`.
pub const MAXWELL3_OVERSHOOT: f64 = 1.1969263735019922;

/// Maximum of the Ewald approximation of `F` for Ex3 over a 1001² grid on
/// `Q` with `β = √π` and both sums truncated at `|m_i|, |n_i| ≤ M`: `(M, max)`.
pub const EX3_SYMBOL_MAX: [(usize, f64); 4] = [
    (1, 0.5466820485568409),
    (2, 0.5471099022284376),
    (3, 0.5471099038066192),
    (4, 0.5471099038066192),
];

/// Row of a largest-eigenvalue table: `N`, `λ_max(T^N)`, extrapolated value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxEigRow {
    pub n: usize,
    pub lambda_max: f64,
    pub extrapolated: Option<f64>,
}

const fn row(n: usize, lambda_max: f64, extrapolated: Option<f64>) -> MaxEigRow {
    MaxEigRow { n, lambda_max, extrapolated }
}

/// Ex3 on the unit square.
pub const EX3_MAX_EIG: [MaxEigRow; 5] = [
    row(16, 0.541802946417726, None),
    row(24, 0.544571778645890, None),
    row(36, 0.545922219922679, Some(0.547207966733364)),
    row(54, 0.546562896841136, Some(0.547141211191569)),
    row(81, 0.546860792009930, Some(0.547119678405314)),
];

/// Ex2 on the unit square.
pub const EX2_MAX_EIG: [MaxEigRow; 5] = [
    row(16, 0.4299869696672885, None),
    row(24, 0.4526591158216325, None),
    row(36, 0.4683227545642122, Some(0.5033301483277116)),
    row(54, 0.4789372344435390, Some(0.5012512843991882)),
    row(81, 0.4860451011088278, Some(0.5004526691660266)),
];

/// Extreme eigenvalues of the Maxwell finite section on the unit cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinMaxEigRow {
    pub n: usize,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub spread: f64,
}

pub const MAXWELL3_MIN_MAX_EIG: [MinMaxEigRow; 4] = [
    MinMaxEigRow { n: 4, lambda_max: 0.67730278666935, lambda_min: -0.3896455148525014, spread: 1.06694830152185 },
    MinMaxEigRow { n: 8, lambda_max: 0.73653727456221, lambda_min: -0.4130173055963489, spread: 1.14955458015856 },
    MinMaxEigRow { n: 12, lambda_max: 0.75323748914578, lambda_min: -0.4193953119966648, spread: 1.17263280114245 },
    MinMaxEigRow { n: 16, lambda_max: 0.76017444184544, lambda_min: -0.4220149407429199, spread: 1.18218938258836 },
];
