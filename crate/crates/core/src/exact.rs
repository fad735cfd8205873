//! Numerically exact tail probabilities of the elliptical pair.
//!
//! Writing `(X, Y) = (R cos Θ, R cos(Θ - ψ))` with `Θ` uniform on `(-π, π)`
//! and `ψ = arccos ρ`, every probability reduces to one-dimensional integrals
//! of the radial survival function over an angle:
//!
//! ```text
//! 2π P(X > x, Y > y) = ∫_{θ₁}^{π/2} S(x / cos θ) dθ + ∫_{ψ-θ₁}^{π/2} S(y / cos φ) dφ,
//! θ₁ = arctan((y/x - ρ) / √(1 - ρ²)).
//! ```
//!
//! The integrands are bounded and smooth on a finite interval. Each integral
//! is evaluated after dividing out its largest value, so the requested
//! tolerance acts relative to the probability itself and stays meaningful far
//! into the tail; since probabilities are at most one, it also bounds the
//! absolute error.
//!
//! A second evaluator works directly with
//! `I(a, x) = ∫_a^∞ S(xs) / (s√(s²-1)) ds` through `s = cosh u`, and
//! [`cross_validate`] checks the two against each other.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{map_slice, Execution};
use crate::geometry::geometry_at;
use crate::pair::EllipticalPair;
use crate::quadrature::{integrate, integrate_semi_infinite, QuadratureResult, Tolerance};
use crate::radial::{RadialModel, Survival};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_EVALUATIONS: usize = 1_000_000;

// GK roundoff floor is about 1e-14 relative; asking for less never converges.
const MIN_REL_TOL: f64 = 1e-13;

fn tolerance(tol: f64) -> Result<Tolerance> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    Ok(Tolerance {
        abs: 0.0,
        rel: tol.max(MIN_REL_TOL),
        max_evals: MAX_EVALUATIONS,
    })
}

/// `∫_{φ₀}^{π/2} S(v / cos φ) dφ` for `φ₀ ∈ (-π/2, π/2]`, `v ≥ 0`.
fn angular_tail(model: &RadialModel, v: f64, phi0: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    if phi0 >= FRAC_PI_2 {
        return Ok(QuadratureResult::exact(0.0));
    }
    if v == 0.0 {
        return Ok(QuadratureResult::exact(FRAC_PI_2 - phi0));
    }
    if phi0 < 0.0 {
        // integrand peaks at φ = 0
        let left = angular_piece(model, v, phi0, 0.0, tol)?;
        let right = angular_piece(model, v, 0.0, FRAC_PI_2, tol)?;
        return Ok(left.add(right));
    }
    angular_piece(model, v, phi0, FRAC_PI_2, tol)
}

fn angular_piece(model: &RadialModel, v: f64, lo: f64, hi: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    let peak = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
    let reference = model.log_survival(v / peak.cos());
    if reference == f64::NEG_INFINITY {
        return Ok(QuadratureResult::exact(0.0));
    }
    let r = integrate(
        |phi: f64| {
            let c = phi.cos();
            if c <= 0.0 {
                return 0.0;
            }
            (model.log_survival(v / c) - reference).exp()
        },
        lo,
        hi,
        tol,
    )?;
    Ok(r.scaled(reference.exp()))
}

fn check_model_threshold(x: f64, name: &str) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and nonnegative, got {x}")))
    }
}

/// `I(a, x) = ∫_a^∞ S(xs) / (s√(s²-1)) ds`, evaluated as
/// `∫_{arccos(1/a)}^{π/2} S(x / cos θ) dθ`.
pub fn integral_i(a: f64, x: f64, model: &RadialModel, tol: f64) -> Result<QuadratureResult> {
    if !(a >= 1.0) || !a.is_finite() {
        return Err(invalid(format!("I(a, x) needs a ≥ 1, got {a}")));
    }
    check_model_threshold(x, "x")?;
    angular_tail(model, x, (1.0 / a).acos(), &tolerance(tol)?)
}

/// Same integral through `s = cosh u`: `∫_{acosh a}^∞ S(x cosh u) / cosh u du`.
pub fn integral_i_hyperbolic(a: f64, x: f64, model: &RadialModel, tol: f64) -> Result<QuadratureResult> {
    if !(a >= 1.0) || !a.is_finite() {
        return Err(invalid(format!("I(a, x) needs a ≥ 1, got {a}")));
    }
    check_model_threshold(x, "x")?;
    let tol = tolerance(tol)?;
    let u0 = a.acosh();
    let reference = model.log_survival(x * a);
    if reference == f64::NEG_INFINITY {
        return Ok(QuadratureResult::exact(0.0));
    }
    // decay rate of the integrand in u at the lower limit
    let rate = model.hazard(x * a) * x;
    let slope = (rate + 1.0 / a) * (a * a - 1.0).sqrt();
    let curvature = (rate + 1.0).sqrt();
    let scale = 1.0 / slope.max(curvature);
    let r = integrate_semi_infinite(
        |u: f64| {
            let c = u.cosh();
            if !c.is_finite() {
                return 0.0;
            }
            (model.log_survival(x * c) - reference).exp() / c
        },
        u0,
        scale,
        &tol,
    )?;
    Ok(r.scaled(reference.exp()))
}

/// `P(X > x, Y > y)` for `x, y ≥ 0`.
pub fn joint_survival_exact(pair: &EllipticalPair, x: f64, y: f64, tol: f64) -> Result<QuadratureResult> {
    check_model_threshold(x, "x")?;
    check_model_threshold(y, "y")?;
    let tolerance = tolerance(tol)?;
    // the pair is exchangeable
    let (x, y) = if y > x { (y, x) } else { (x, y) };
    let rho = pair.rho();
    let psi = pair.psi();
    if x == 0.0 {
        return Ok(QuadratureResult::exact((PI - psi) / (2.0 * PI)));
    }
    let theta1 = ((y / x - rho) / (1.0 - rho * rho).sqrt()).atan();
    let first = angular_tail(pair.model(), x, theta1, &tolerance)?;
    let second = if y > 0.0 {
        angular_tail(pair.model(), y, psi - theta1, &tolerance)?
    } else {
        QuadratureResult::exact(0.0)
    };
    let r = first.add(second).scaled(1.0 / (2.0 * PI));
    Ok(QuadratureResult {
        value: r.value.clamp(0.0, 1.0),
        ..r
    })
}

/// `P(X > x, Y > y)` through `I(α, x)` and `I(β, y)`:
/// `[I(α,x) + I(β,y)]/2π` when `y ≥ ρx`, `[2I(1,x) - I(α,x) + I(β,y)]/2π` otherwise.
pub fn joint_survival_iform(pair: &EllipticalPair, x: f64, y: f64, tol: f64) -> Result<QuadratureResult> {
    if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
        return Err(invalid(format!("the I-form needs x, y > 0, got ({x}, {y})")));
    }
    let (x, y) = if y > x { (y, x) } else { (x, y) };
    let g = geometry_at(pair.rho(), x, y)?;
    let m = pair.model();
    let ia = integral_i_hyperbolic(g.alpha, x, m, tol)?;
    let ib = integral_i_hyperbolic(g.beta, y, m, tol)?;
    let total = if y >= pair.rho() * x {
        ia.add(ib)
    } else {
        let i1 = integral_i_hyperbolic(1.0, x, m, tol)?;
        QuadratureResult {
            value: 2.0 * i1.value - ia.value + ib.value,
            abs_error_estimate: 2.0 * i1.abs_error_estimate + ia.abs_error_estimate + ib.abs_error_estimate,
            evaluations: i1.evaluations + ia.evaluations + ib.evaluations,
        }
    };
    Ok(total.scaled(1.0 / (2.0 * PI)))
}

/// Both evaluations of the joint survival and their absolute discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub angular: QuadratureResult,
    pub iform: QuadratureResult,
    pub discrepancy: f64,
}

/// Evaluates both forms; fails with [`Error::Unreliable`] if they differ by
/// more than `10·tol`.
pub fn cross_validate(pair: &EllipticalPair, x: f64, y: f64, tol: f64) -> Result<CrossCheck> {
    let angular = joint_survival_exact(pair, x, y, tol)?;
    let iform = joint_survival_iform(pair, x, y, tol)?;
    let discrepancy = (angular.value - iform.value).abs();
    if discrepancy > 10.0 * tol {
        return Err(Error::Unreliable(format!(
            "angular {} vs I-form {} at ({x}, {y}) differ by {discrepancy:e}",
            angular.value, iform.value
        )));
    }
    Ok(CrossCheck {
        angular,
        iform,
        discrepancy,
    })
}

/// `P(X > x) = I(1, x)/π`; negative `x` uses the symmetry of `X` about zero.
pub fn marginal_survival_exact(pair: &EllipticalPair, x: f64, tol: f64) -> Result<QuadratureResult> {
    if !x.is_finite() {
        return Err(invalid(format!("x must be finite, got {x}")));
    }
    let tolerance = tolerance(tol)?;
    let upper = angular_tail(pair.model(), x.abs(), 0.0, &tolerance)?.scaled(1.0 / PI);
    if x >= 0.0 {
        Ok(upper)
    } else {
        Ok(QuadratureResult {
            value: 1.0 - upper.value,
            ..upper
        })
    }
}

/// `Ψ(y, x) = P(Y > y | X > x)`.
pub fn conditional_survival_exact(pair: &EllipticalPair, x: f64, y: f64, tol: f64) -> Result<QuadratureResult> {
    let marginal = marginal_survival_exact(pair, x, tol)?;
    if !(marginal.value > 10.0 * marginal.abs_error_estimate) || marginal.value == 0.0 {
        return Err(Error::Unreliable(format!(
            "P(X > {x}) = {:e} is not resolved above its error estimate {:e}",
            marginal.value, marginal.abs_error_estimate
        )));
    }
    let joint = joint_survival_exact(pair, x, y, tol)?;
    let value = joint.value / marginal.value;
    let rel = joint.abs_error_estimate / joint.value.max(f64::MIN_POSITIVE)
        + marginal.abs_error_estimate / marginal.value;
    Ok(QuadratureResult {
        value: value.clamp(0.0, 1.0),
        abs_error_estimate: value * rel,
        evaluations: joint.evaluations + marginal.evaluations,
    })
}

/// Joint survival over a list of threshold points.
pub fn joint_survival_grid(
    pair: &EllipticalPair,
    points: &[(f64, f64)],
    tol: f64,
    exec: Execution,
) -> Vec<Result<QuadratureResult>> {
    map_slice(exec, points, |&(x, y)| joint_survival_exact(pair, x, y, tol))
}
