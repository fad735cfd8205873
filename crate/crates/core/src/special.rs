//! Standard normal distribution helpers.
//!
//! Both tails go through `erfc`, which keeps full relative accuracy far into
//! the tail where `1 - cdf` would cancel.

use std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal distribution function Φ(z).
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal survival function 1 - Φ(z).
#[inline]
pub fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_sf(1.0) - 0.158_655_253_931_457_05).abs() < 1e-16);
        assert!(((norm_sf(3.0) - 1.349_898_031_630_094_5e-3) / 1.35e-3).abs() < 1e-14);
        // deep tail keeps relative accuracy
        let s = norm_sf(10.0);
        assert!(((s - 7.619_853_024_160_526e-24) / s).abs() < 1e-13);
    }

    #[test]
    fn symmetry() {
        for z in [-3.0, -0.7, 0.0, 1.3, 5.0] {
            assert!((norm_cdf(z) + norm_sf(z) - 1.0).abs() < 1e-15);
            assert!((norm_cdf(-z) - norm_sf(z)).abs() < 1e-16);
        }
    }
}
