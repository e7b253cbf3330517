//! Numerical symbols, spectra, numerical ranges and stability regions for
//! delta-delta discretizations of strongly singular convolution operators
//! with kernels `K(x) = p(x) |x|^(-d-2)`, `p` a trace-free quadratic form.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`]: the kernel class, its Fourier symbol and the built-in kernels;
//! * [`ewald`]: the numerical symbol `F(τ) = Σ_{m≠0} K(m) e^{i m·τ}` of the
//!   infinite (block) Toeplitz matrix, evaluated by Ewald splitting;
//! * [`lattice`]: grid domains and finite-section operators (dense and
//!   FFT-accelerated through circulant embedding);
//! * [`spectra`]: extreme eigenvalues, full spectra, numerical-range
//!   boundaries and eigenvalue extrapolation;
//! * [`stability`]: stability regions, verdicts and the Clausius–Mossotti map;
//! * [`solver`]: Krylov solvers for the shifted system `(λI − T)u = f`.
//!
//! Data-parallel loops (grid scans, lattice sums, angle sweeps) run on rayon
//! when the `parallel` feature is enabled and fall back to plain iterators
//! otherwise; see [`Par`].

pub mod error;
pub mod ewald;
mod fft;
pub mod kernels;
pub mod lattice;
mod par;
pub mod reference;
pub mod solver;
pub mod special;
pub mod spectra;
pub mod stability;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use par::Par;

/// Small dense complex matrix used for kernel values and symbol samples.
pub type Block = nalgebra::DMatrix<Complex64>;
