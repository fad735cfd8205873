//! Closed-form constants that locate the dominant radial direction of the
//! joint tail `{X > x, Y > y}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pair::check_rho;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailGeometry {
    /// `α = √(1 + (y/x - ρ)²/(1 - ρ²))`; `(αx)` is the radius of the
    /// closest point of the quadrant `{X > x, Y > y}` to the origin.
    pub alpha: f64,
    /// `β = αx/y`.
    pub beta: f64,
    /// `K = x²(1-ρ²)^{3/2} / ((x - ρy)(y - ρx))`, present only when both
    /// factors of the denominator are positive.
    pub k: Option<f64>,
    /// `ψ = arccos ρ`.
    pub psi: f64,
    /// Exponential decay rate of the shifted conditional tail (directional
    /// constants only).
    pub lambda: Option<f64>,
}

impl TailGeometry {
    pub fn k_or_err(&self) -> Result<f64> {
        self.k
            .ok_or_else(|| Error::GeometryUndefined("K requires ρx < y < x/ρ".into()))
    }
}

/// Geometry of the query point `(x, y)` for correlation `ρ`.
pub fn geometry_at(rho: f64, x: f64, y: f64) -> Result<TailGeometry> {
    check_rho(rho)?;
    if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
        return Err(invalid(format!("x and y must be positive, got ({x}, {y})")));
    }
    let one_m = 1.0 - rho * rho;
    let t = y / x - rho;
    let alpha = (1.0 + t * t / one_m).sqrt();
    let den = (x - rho * y) * (y - rho * x);
    let k = if x - rho * y > 0.0 && y - rho * x > 0.0 {
        Some(x * x * one_m.powf(1.5) / den)
    } else {
        None
    };
    Ok(TailGeometry {
        alpha,
        beta: alpha * x / y,
        k,
        psi: rho.acos(),
        lambda: None,
    })
}

/// Constants along the ray `y = a·x`: `(α_{a,ρ}, K_{ρ,a}, λ_{ρ,a})`.
pub fn directional_constants(rho: f64, a: f64) -> Result<TailGeometry> {
    check_rho(rho)?;
    if !(a > rho && a <= 1.0) {
        return Err(invalid(format!("direction a must lie in (ρ, 1] = ({rho}, 1], got {a}")));
    }
    let one_m = 1.0 - rho * rho;
    let q = 1.0 - 2.0 * a * rho + a * a;
    let alpha = (q / one_m).sqrt();
    Ok(TailGeometry {
        alpha,
        beta: alpha / a,
        k: Some(one_m.powf(1.5) / ((1.0 - a * rho) * (a - rho))),
        psi: rho.acos(),
        lambda: Some((a - rho) / (one_m * q).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    /// K recovered from the two Laplace terms `1/(α√(α²-1))` and
    /// `(x/y)/(β√(β²-1))` whose sum is `αK`.
    fn k_from_laplace_terms(rho: f64, x: f64, y: f64) -> f64 {
        let alpha = (1.0 + (y / x - rho).powi(2) / (1.0 - rho * rho)).sqrt();
        let beta = alpha * x / y;
        (1.0 / (alpha * (alpha * alpha - 1.0).sqrt()) + (x / y) / (beta * (beta * beta - 1.0).sqrt())) / alpha
    }

    #[test]
    fn symmetric_diagonal() {
        let g = geometry_at(0.0, 1.0, 1.0).unwrap();
        assert!((g.alpha - SQRT2).abs() < 1e-15);
        assert!((g.beta - SQRT2).abs() < 1e-15);
        assert!((g.k.unwrap() - 1.0).abs() < 1e-15);
        assert!((g.psi - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn boundary_has_unit_alpha_and_no_k() {
        let g = geometry_at(0.5, 1.0, 0.5).unwrap();
        assert_eq!(g.alpha, 1.0);
        assert!(g.k.is_none());
        assert!(g.k_or_err().is_err());
        assert!(geometry_at(0.5, 1.0, 2.0).unwrap().k.is_none());
    }

    #[test]
    fn interior_point() {
        let g = geometry_at(0.5, 2.0, 1.5).unwrap();
        assert!((g.alpha - 1.040_832_999_733_066_3).abs() < 1e-12);
        let k = k_from_laplace_terms(0.5, 2.0, 1.5);
        assert!((k - 4.156_921_938_165_307).abs() < 1e-12);
        assert!((g.k.unwrap() - k).abs() < 1e-12);
    }

    #[test]
    fn directional_examples() {
        let d = directional_constants(0.0, 1.0).unwrap();
        assert!((d.alpha - SQRT2).abs() < 1e-15);
        assert!((d.k.unwrap() - 1.0).abs() < 1e-15);
        assert!((d.lambda.unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let d = directional_constants(0.5, 1.0).unwrap();
        assert!((d.alpha - 1.154_700_538_379_251_7).abs() < 1e-15);
        assert!((d.k.unwrap() - 2.598_076_211_353_316).abs() < 1e-14);
        assert!((d.lambda.unwrap() - 0.577_350_269_189_625_8).abs() < 1e-15);
        assert!(directional_constants(0.5, 0.5).is_err());
        assert!(directional_constants(0.5, 1.2).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(geometry_at(1.0, 1.0, 1.0).is_err());
        assert!(geometry_at(-0.1, 1.0, 1.0).is_err());
        assert!(geometry_at(0.2, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn scale_invariance(rho in 0.0..0.95f64, x in 0.1..20.0f64, r in 0.05..1.0f64, t in 0.1..50.0f64) {
            let y = r * x;
            let g1 = geometry_at(rho, x, y).unwrap();
            let g2 = geometry_at(rho, t * x, t * y).unwrap();
            prop_assert!((g1.alpha - g2.alpha).abs() < 1e-12);
            prop_assert!((g1.beta - g2.beta).abs() < 1e-12 * g1.beta);
            match (g1.k, g2.k) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9 * a),
                (None, None) => {}
                _ => prop_assert!(false, "K defined at one scale only"),
            }
        }

        #[test]
        fn directional_matches_pointwise(rho in 0.0..0.95f64, frac in 0.01..1.0f64, x in 0.1..30.0f64) {
            let a = rho + frac * (1.0 - rho);
            let d = directional_constants(rho, a).unwrap();
            let g = geometry_at(rho, x, a * x).unwrap();
            prop_assert!((d.alpha - g.alpha).abs() < 1e-12);
            prop_assert!(d.alpha > 1.0);
            prop_assert!(d.lambda.unwrap() > 0.0);
            prop_assert!((d.k.unwrap() - g.k.unwrap()).abs() < 1e-9 * d.k.unwrap());
            prop_assert!((d.k.unwrap() - k_from_laplace_terms(rho, x, a * x)).abs() < 1e-8 * d.k.unwrap());
        }
    }

    #[test]
    fn lambda_vanishes_at_the_boundary_ray() {
        let l: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|e| directional_constants(0.3, 0.3 + e).unwrap().lambda.unwrap())
            .collect();
        assert!(l.windows(2).all(|w| w[1] < w[0]) && l[2] < 1e-5);
    }
}
