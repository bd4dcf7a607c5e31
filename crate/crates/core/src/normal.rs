//! Standard normal helpers built on the error function.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Density of `N(mean, variance)` at `x`.
#[inline]
pub fn density(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / variance).exp() / (2.0 * PI * variance).sqrt()
}

#[inline]
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail `Q(z) = P[Z > z]`.
#[inline]
pub fn sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Inverse of the upper tail, `Q^{-1}(p)` for `p` in `(0, 1)`.
pub fn inv_sf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::INFINITY;
    }
    if p >= 1.0 {
        return f64::NEG_INFINITY;
    }
    let z = SQRT_2 * erfc_inv(2.0 * p);
    if !z.is_finite() {
        return z;
    }
    // Two Newton steps on Q(z) = p tighten the statrs estimate.
    let mut z = z;
    for _ in 0..2 {
        let d = pdf(z);
        if d <= 0.0 {
            break;
        }
        z += (sf(z) - p) / d;
    }
    z
}

/// Standard normal quantile.
pub fn inv_cdf(p: f64) -> f64 {
    if p < 0.5 {
        -inv_sf(p)
    } else {
        inv_sf(1.0 - p)
    }
}

/// Closed-form expected improvement `E[max(F - best, 0)]` for `F ~ N(mean, sd^2)`.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    if sd <= 0.0 {
        return (mean - best).max(0.0);
    }
    let z = (mean - best) / sd;
    (mean - best) * cdf(z) + sd * pdf(z)
}
