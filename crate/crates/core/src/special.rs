//! Gamma-type special functions at half-integer arguments.
//!
//! Everything here is built from `exp` and `erfc`: the complete and upper
//! incomplete Gamma functions at `a = k/2` follow from the bases
//! `Γ(1, x) = e^{-x}` and `Γ(1/2, x) = √π erfc(√x)` by the upward recurrence
//! `Γ(a+1, x) = a Γ(a, x) + x^a e^{-x}`, which only adds positive terms.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Returns `k` such that `a = k/2` when `a` is a positive multiple of 1/2.
fn half_units(a: f64) -> Option<u32> {
    let twice = 2.0 * a;
    if twice.is_finite() && twice >= 1.0 && twice.fract() == 0.0 && twice <= 400.0 {
        Some(twice as u32)
    } else {
        None
    }
}

/// Complete Gamma function `Γ(a)` for `a ∈ {1/2, 1, 3/2, ...}`.
pub fn gamma_half_integer(a: f64) -> Result<f64> {
    let Some(k) = half_units(a) else {
        return domain(format!("gamma: a = {a} is not a positive multiple of 1/2"));
    };
    let (mut value, mut s) = if k % 2 == 0 {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while 2.0 * s < k as f64 {
        value *= s;
        s += 1.0;
    }
    Ok(value)
}

/// Upper incomplete Gamma function `Γ(a, x) = ∫_x^∞ t^{a-1} e^{-t} dt` for
/// `a ∈ {1/2, 1, 3/2, ...}` and `x ≥ 0`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    let Some(k) = half_units(a) else {
        return domain(format!(
            "incomplete gamma: a = {a} is not a positive multiple of 1/2"
        ));
    };
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!("incomplete gamma: x = {x} must be finite and >= 0"));
    }
    let emx = (-x).exp();
    let (mut value, mut s) = if k % 2 == 0 {
        (emx, 1.0)
    } else {
        (PI.sqrt() * erfc(x.sqrt()), 0.5)
    };
    while 2.0 * s < k as f64 {
        value = s * value + x.powf(s) * emx;
        s += 1.0;
    }
    Ok(value)
}

/// Regularized upper incomplete Gamma `Γ(a, x) / Γ(a)`.
pub fn regularized_upper_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(upper_incomplete_gamma(a, x)? / gamma_half_integer(a)?)
}

/// Volume of the unit ball in `R^d`, `ν_d = π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    assert!(d >= 1, "dimension must be positive");
    PI.powf(d as f64 / 2.0) / gamma_half_integer(d as f64 / 2.0 + 1.0).expect("d >= 1")
}

/// `Γ(1/4)`.
pub fn gamma_quarter() -> f64 {
    libm::tgamma(0.25)
}
