//! Leading-order tail expansions of the joint, marginal and conditional
//! survival functions, each paired with the size of the dropped remainder.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::{conditional_survival_exact, joint_survival_exact, marginal_survival_exact};
use crate::exec::{map_slice, Execution};
use crate::geometry::{directional_constants, geometry_at};
use crate::pair::EllipticalPair;
use crate::radial::Survival;
use crate::special::norm_sf;

/// Smallest `α` accepted by the off-diagonal expansions.
pub const ALPHA_MIN: f64 = 1.05;
/// Half-width of the strip around `y = ρx`, in units of `√(1-ρ²)`, handled
/// by the central expansion; also the gap below `ρ` for the lower regime.
pub const STRIP: f64 = 0.05;
/// Largest `|z|` accepted by the central expansion.
pub const Z_BOUND: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Thm1a,
    Thm1b,
    Thm1c,
    Thm2,
    Thm3,
    Marginal,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Thm1a => "thm1a",
            Regime::Thm1b => "thm1b",
            Regime::Thm1c => "thm1c",
            Regime::Thm2 => "thm2",
            Regime::Thm3 => "thm3",
            Regime::Marginal => "marginal",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().trim_start_matches("thm") {
            "1a" => Regime::Thm1a,
            "1b" => Regime::Thm1b,
            "1c" => Regime::Thm1c,
            "2" => Regime::Thm2,
            "3" => Regime::Thm3,
            "marginal" => Regime::Marginal,
            other => return Err(invalid(format!("unknown regime '{other}'"))),
        })
    }
}

/// Size of one neglected remainder term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub label: String,
    pub magnitude: f64,
}

impl Correction {
    fn new(label: &str, magnitude: f64) -> Self {
        Self {
            label: label.to_string(),
            magnitude: magnitude.abs(),
        }
    }
}

/// Leading-order value of a tail expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub value: f64,
    /// Second evaluation of the same quantity: the `g₂` form for the
    /// conditional expansions, the neighbouring regime at boundary points.
    pub alt_value: Option<f64>,
    pub regime: Regime,
    pub corrections: Vec<Correction>,
    /// Threshold `y` implied by the central expansion or the shifted form.
    pub implied_y: Option<f64>,
    pub boundary: bool,
    pub warnings: Vec<String>,
}

impl TailEstimate {
    fn new(value: f64, regime: Regime, corrections: Vec<Correction>) -> Self {
        Self {
            value: value.max(0.0),
            alt_value: None,
            regime,
            corrections,
            implied_y: None,
            boundary: false,
            warnings: Vec::new(),
        }
    }

    /// Sum of the correction magnitudes.
    pub fn correction_total(&self) -> f64 {
        self.corrections.iter().map(|c| c.magnitude).sum()
    }
}

fn regime_error(regime: &'static str, reason: String, suggestion: &'static str) -> Error {
    Error::Regime {
        regime,
        reason,
        suggestion,
    }
}

fn check_positive(x: f64, name: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn log_ratio(pair: &EllipticalPair, num: f64, den: f64) -> f64 {
    pair.model().log_survival(num) - pair.model().log_survival(den)
}

fn off_diagonal_corrections(pair: &EllipticalPair, alpha: f64, x: f64) -> Vec<Correction> {
    let m = pair.model();
    vec![
        Correction::new("A(αx)", m.second_order_a(alpha * x)),
        Correction::new("1/(x w(αx))", 1.0 / (x * m.scaling_w(alpha * x))),
    ]
}

fn check_off_diagonal(pair: &EllipticalPair, x: f64, y: f64, regime: &'static str) -> Result<(f64, f64)> {
    check_positive(x, "x")?;
    check_positive(y, "y")?;
    let rho = pair.rho();
    if !(y > rho * x && y <= x) {
        return Err(regime_error(regime, format!("needs ρx < y ≤ x, got x={x}, y={y}, ρ={rho}"), "thm1b or thm1c"));
    }
    let g = geometry_at(rho, x, y)?;
    if g.alpha < ALPHA_MIN {
        return Err(regime_error(
            regime,
            format!("α = {} is below {ALPHA_MIN}", g.alpha),
            "thm1b",
        ));
    }
    Ok((g.alpha, g.k_or_err()?))
}

fn thm1a_value(pair: &EllipticalPair, x: f64, y: f64) -> Result<TailEstimate> {
    let g = geometry_at(pair.rho(), x, y)?;
    let (alpha, k) = (g.alpha, g.k_or_err()?);
    let m = pair.model();
    let ax = alpha * x;
    let value = alpha * k / (2.0 * std::f64::consts::PI) * m.survival(ax) / (x * m.scaling_w(ax));
    Ok(TailEstimate::new(value, Regime::Thm1a, off_diagonal_corrections(pair, alpha, x)))
}

/// `P(X > x, Y > y) ≈ αK/(2π) · S(αx)/(x w(αx))` for `ρx < y ≤ x`, `α ≥ 1.05`.
pub fn thm1a_joint(pair: &EllipticalPair, x: f64, y: f64) -> Result<TailEstimate> {
    check_off_diagonal(pair, x, y, "thm1a")?;
    thm1a_value(pair, x, y)
}

/// The threshold `y = x[ρ + z√(1-ρ²)/√h(x) + ρ/h(x)]` of the central expansion.
pub fn thm1b_threshold(pair: &EllipticalPair, x: f64, z: f64) -> f64 {
    let rho = pair.rho();
    let h = pair.model().h(x);
    x * (rho + z * (1.0 - rho * rho).sqrt() / h.sqrt() + rho / h)
}

/// Inverse of [`thm1b_threshold`].
pub fn thm1b_z(pair: &EllipticalPair, x: f64, y: f64) -> f64 {
    let rho = pair.rho();
    let h = pair.model().h(x);
    (y / x - rho - rho / h) * h.sqrt() / (1.0 - rho * rho).sqrt()
}

fn thm1b_value(pair: &EllipticalPair, x: f64, z: f64) -> TailEstimate {
    let m = pair.model();
    let h = m.h(x);
    let value = m.survival(x) / (2.0 * std::f64::consts::PI * h).sqrt() * norm_sf(z);
    let mut est = TailEstimate::new(
        value,
        Regime::Thm1b,
        vec![Correction::new("A(x)", m.second_order_a(x)), Correction::new("1/h(x)", 1.0 / h)],
    );
    est.implied_y = Some(thm1b_threshold(pair, x, z));
    est
}

/// `P(X > x, Y > y) ≈ S(x)/√(2π h(x)) · (1 - Φ(z))` at the implied `y`.
pub fn thm1b_joint(pair: &EllipticalPair, x: f64, z: f64) -> Result<TailEstimate> {
    check_positive(x, "x")?;
    if !(z.abs() <= Z_BOUND) {
        return Err(regime_error("thm1b", format!("|z| = {} exceeds {Z_BOUND}", z.abs()), "thm1a or thm1c"));
    }
    let h = pair.model().h(x);
    if !(h > 1.0) {
        return Err(regime_error(
            "thm1b",
            format!("h(x) = {h} ≤ 1, x is not in the asymptotic range"),
            "exact",
        ));
    }
    Ok(thm1b_value(pair, x, z))
}

fn thm1c_value(pair: &EllipticalPair, x: f64, y: f64) -> Result<TailEstimate> {
    let m = pair.model();
    let h = m.h(x);
    let value = m.survival(x) / (2.0 * std::f64::consts::PI * h).sqrt();
    let alpha = if y > 0.0 { geometry_at(pair.rho(), x, y)?.alpha } else { 1.0 / (1.0 - pair.rho().powi(2)).sqrt() };
    let ratio = log_ratio(pair, alpha * x, x).exp();
    Ok(TailEstimate::new(
        value,
        Regime::Thm1c,
        vec![
            Correction::new("A(x)", m.second_order_a(x)),
            Correction::new("h(x)^(-1/2)[h(x)^(-1/2) + S(αx)/S(x)]", (1.0 / h.sqrt() + ratio) / h.sqrt()),
        ],
    ))
}

/// `P(X > x, Y > y) ≈ S(x)/√(2π h(x))` for `0 ≤ y ≤ (ρ - 0.05)x`.
pub fn thm1c_joint(pair: &EllipticalPair, x: f64, y: f64) -> Result<TailEstimate> {
    check_positive(x, "x")?;
    if !(y >= 0.0 && y.is_finite()) {
        return Err(invalid(format!("y must be nonnegative, got {y}")));
    }
    let rho = pair.rho();
    if !(rho > 0.0) {
        return Err(regime_error("thm1c", "needs ρ > 0".into(), "thm1a or thm1b"));
    }
    if y / x > rho - STRIP {
        return Err(regime_error(
            "thm1c",
            format!("y/x = {} is above ρ - {STRIP} = {}", y / x, rho - STRIP),
            "thm1b",
        ));
    }
    thm1c_value(pair, x, y)
}

/// Regime-2 form with a caller-supplied `P(X > αx)`:
/// `α^{3/2}K / √(2π x w(αx)) · P(X > αx)`.
pub fn thm2_joint_with(pair: &EllipticalPair, x: f64, y: f64, p_alpha: f64) -> Result<TailEstimate> {
    let (alpha, k) = check_off_diagonal(pair, x, y, "thm2")?;
    let w = pair.model().scaling_w(alpha * x);
    let value = alpha.powf(1.5) * k / (2.0 * std::f64::consts::PI * x * w).sqrt() * p_alpha;
    Ok(TailEstimate::new(value, Regime::Thm2, off_diagonal_corrections(pair, alpha, x)))
}

/// Regime-2 form with the quadrature-exact `P(X > αx)`.
pub fn thm2_joint(pair: &EllipticalPair, x: f64, y: f64, tol: f64) -> Result<TailEstimate> {
    let (alpha, _) = check_off_diagonal(pair, x, y, "thm2")?;
    let p = marginal_survival_exact(pair, alpha * x, tol)?.value;
    thm2_joint_with(pair, x, y, p)
}

/// `P(X > x) ≈ S(x)/√(2π h(x))`.
pub fn marginal_berman(pair: &EllipticalPair, x: f64) -> Result<TailEstimate> {
    check_positive(x, "x")?;
    let m = pair.model();
    let h = m.h(x);
    if !(h > 1.0) {
        return Err(regime_error("marginal", format!("h(x) = {h} ≤ 1"), "exact"));
    }
    let value = m.survival(x) / (2.0 * std::f64::consts::PI * h).sqrt();
    Ok(TailEstimate::new(
        value,
        Regime::Marginal,
        vec![Correction::new("A(x)", m.second_order_a(x)), Correction::new("1/h(x)", 1.0 / h)],
    ))
}

/// `g₁(α, x) = √(w(x)/(αx)) / w(αx) · S(αx)/S(x)`.
pub fn g1(pair: &EllipticalPair, alpha: f64, x: f64) -> f64 {
    let m = pair.model();
    (m.scaling_w(x) / (alpha * x)).sqrt() / m.scaling_w(alpha * x) * log_ratio(pair, alpha * x, x).exp()
}

/// `g₂(α, x) = P(X > αx) / (√(x w(αx)) P(X > x))` with exact marginals.
pub fn g2(pair: &EllipticalPair, alpha: f64, x: f64, tol: f64) -> Result<f64> {
    let num = marginal_survival_exact(pair, alpha * x, tol)?.value;
    let den = marginal_survival_exact(pair, x, tol)?.value;
    if !(den > 0.0) {
        return Err(Error::Unreliable(format!("P(X > {x}) underflows")));
    }
    Ok(num / ((x * pair.model().scaling_w(alpha * x)).sqrt() * den))
}

/// `P(Y > y | X > x) ≈ α^{3/2}K/√(2π) · g₁(α, x)`; `alt_value` carries the
/// `g₂` version.
pub fn thm3_conditional(pair: &EllipticalPair, x: f64, y: f64, tol: f64) -> Result<TailEstimate> {
    let (alpha, k) = check_off_diagonal(pair, x, y, "thm3")?;
    let c = alpha.powf(1.5) * k / (2.0 * std::f64::consts::PI).sqrt();
    let mut est = TailEstimate::new(c * g1(pair, alpha, x), Regime::Thm3, off_diagonal_corrections(pair, alpha, x));
    est.alt_value = Some(c * g2(pair, alpha, x, tol)?);
    Ok(est)
}

/// `P(Y > ax + z/w(α_a x) | X > x) ≈ α_a^{3/2}K_a/√(2π) · e^{-λ_a z} · g₁(α_a, x)`
/// for `a ∈ (ρ, 1]`, `z ≥ 0`.
pub fn thm3_shifted(pair: &EllipticalPair, a: f64, x: f64, z: f64, tol: f64) -> Result<TailEstimate> {
    check_positive(x, "x")?;
    if !(z >= 0.0 && z.is_finite()) {
        return Err(invalid(format!("z must be nonnegative, got {z}")));
    }
    let d = directional_constants(pair.rho(), a)?;
    let (alpha, lambda) = (d.alpha, d.lambda.expect("directional constants carry λ"));
    let c = alpha.powf(1.5) * d.k_or_err()? / (2.0 * std::f64::consts::PI).sqrt() * (-lambda * z).exp();
    let mut est = TailEstimate::new(c * g1(pair, alpha, x), Regime::Thm3, off_diagonal_corrections(pair, alpha, x));
    est.alt_value = Some(c * g2(pair, alpha, x, tol)?);
    est.implied_y = Some(a * x + z / pair.model().scaling_w(alpha * x));
    Ok(est)
}

/// Picks the expansion for `P(X > x, Y > y)` from the position of `y/x`
/// relative to `ρ`. Points in the gaps between regimes are evaluated with
/// both neighbours and flagged.
pub fn auto_joint(pair: &EllipticalPair, x: f64, y: f64) -> Result<TailEstimate> {
    check_positive(x, "x")?;
    if !(y >= 0.0 && y.is_finite()) {
        return Err(invalid(format!("y must be nonnegative, got {y}")));
    }
    let mut warnings = Vec::new();
    let (x, y) = if y > x {
        warnings.push(format!("swapped to (x, y) = ({y}, {x}) by exchangeability"));
        (y, x)
    } else {
        (x, y)
    };
    let rho = pair.rho();
    let s = (1.0 - rho * rho).sqrt();
    let t = y / x;
    let z = thm1b_z(pair, x, y);
    let central_ok = pair.model().h(x) > 1.0 && z.abs() <= Z_BOUND;
    let mut est = if (t - rho).abs() <= STRIP * s && central_ok {
        thm1b_value(pair, x, z)
    } else if t > rho && geometry_at(rho, x, y)?.alpha >= ALPHA_MIN {
        thm1a_value(pair, x, y)?
    } else if rho > 0.0 && t <= rho - STRIP {
        thm1c_value(pair, x, y)?
    } else if t > rho {
        let mut e = thm1a_value(pair, x, y)?;
        e.alt_value = central_ok.then(|| thm1b_value(pair, x, z).value);
        e.boundary = true;
        e.warnings.push(format!("α below {ALPHA_MIN}: between the off-diagonal and central regimes"));
        e
    } else if t < rho && rho > 0.0 && (t - rho).abs() > STRIP * s {
        let mut e = thm1c_value(pair, x, y)?;
        e.alt_value = central_ok.then(|| thm1b_value(pair, x, z).value);
        e.boundary = true;
        e.warnings.push("y/x just below ρ: between the lower and central regimes".into());
        e
    } else {
        let mut e = thm1b_value(pair, x, z.clamp(-Z_BOUND, Z_BOUND));
        e.boundary = true;
        e.warnings.push(format!("central expansion outside |z| ≤ {Z_BOUND} or h(x) ≤ 1"));
        e
    };
    warnings.append(&mut est.warnings);
    est.warnings = warnings;
    Ok(est)
}

/// Which point sequence a convergence study follows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Ray `y = a·x` (or the direction of the shifted conditional form).
    pub a: f64,
    /// Central-expansion or shift parameter.
    pub z: f64,
}

impl Default for Path {
    fn default() -> Self {
        Self { a: 1.0, z: 0.0 }
    }
}

/// One grid point of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub x: f64,
    pub y: f64,
    pub asymptotic: f64,
    pub exact: f64,
    pub ratio: f64,
    pub corrections: Vec<Correction>,
}

/// Asymptotic value over exact value along `x_grid`.
///
/// The exact comparator is the joint survival for the joint expansions, the
/// marginal for [`Regime::Marginal`] and the conditional survival for
/// [`Regime::Thm3`] (shifted form when `path.z > 0`).
pub fn converge(
    pair: &EllipticalPair,
    regime: Regime,
    x_grid: &[f64],
    path: Path,
    tol: f64,
    exec: Execution,
) -> Result<Vec<ConvergenceRow>> {
    let rows = map_slice(exec, x_grid, |&x| -> Result<ConvergenceRow> {
        let (est, y, exact) = match regime {
            Regime::Thm1a | Regime::Thm1c | Regime::Thm2 => {
                let y = path.a * x;
                let est = match regime {
                    Regime::Thm1a => thm1a_joint(pair, x, y)?,
                    Regime::Thm1c => thm1c_joint(pair, x, y)?,
                    _ => thm2_joint(pair, x, y, tol)?,
                };
                (est, y, joint_survival_exact(pair, x, y, tol)?.value)
            }
            Regime::Thm1b => {
                let est = thm1b_joint(pair, x, path.z)?;
                let y = est.implied_y.expect("central expansion sets y");
                let exact = joint_survival_exact(pair, x, y, tol)?.value;
                (est, y, exact)
            }
            Regime::Marginal => (marginal_berman(pair, x)?, f64::NAN, marginal_survival_exact(pair, x, tol)?.value),
            Regime::Thm3 => {
                let est = if path.z > 0.0 {
                    thm3_shifted(pair, path.a, x, path.z, tol)?
                } else {
                    thm3_conditional(pair, x, path.a * x, tol)?
                };
                let y = est.implied_y.unwrap_or(path.a * x);
                (est, y, conditional_survival_exact(pair, x, y, tol)?.value)
            }
        };
        Ok(ConvergenceRow {
            x,
            y,
            asymptotic: est.value,
            exact,
            ratio: est.value / exact,
            corrections: est.corrections,
        })
    });
    rows.into_iter().collect()
}
