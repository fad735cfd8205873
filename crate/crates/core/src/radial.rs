//! Radial laws in the Gumbel max-domain of attraction.
//!
//! Every model is built from a serializable [`ModelDescriptor`] and exposes
//! its survival function `S = 1 - F`, the scaling function `w`, the von Mises
//! factor `d`, a quantile, and the order `A(u)` of its second-order remainder.
//!
//! Tail formulas such as `C x^N exp(-c x^δ)` are only survival functions
//! beyond a validity radius `x0`. Below `x0` the log-survival is replaced by a
//! cubic in `u = (x/x0)^p` that starts at `log S(0) = 0` with zero slope and
//! meets the tail formula with matching value and derivative at `x0`; the
//! exponent `p` is raised as far as needed for the cubic to stay monotone.

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_semi_infinite, Tolerance};

/// Anything with a computable log-survival function on `[0, ∞)`.
pub trait Survival: Sync {
    /// `ln S(r)`; `0` at and below the origin, `-∞` once `S` underflows.
    fn log_survival(&self, r: f64) -> f64;

    fn survival(&self, r: f64) -> f64 {
        self.log_survival(r).exp()
    }
}

/// Adapts a plain survival closure (e.g. a user-supplied tail).
pub struct SurvivalFn<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> Survival for SurvivalFn<F> {
    fn log_survival(&self, r: f64) -> f64 {
        (self.0)(r).ln()
    }

    fn survival(&self, r: f64) -> f64 {
        (self.0)(r)
    }
}

fn one() -> f64 {
    1.0
}

/// Kotz Type I tail `S(x) = C x^N exp(-c x^δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KotzParams {
    #[serde(rename = "C")]
    pub coefficient: f64,
    #[serde(rename = "N")]
    pub exponent: f64,
    #[serde(rename = "c")]
    pub rate: f64,
    #[serde(rename = "delta")]
    pub shape: f64,
    /// Constant in `A(u) = κ u^{-δ}`.
    #[serde(default = "one")]
    pub kappa: f64,
    /// Validity radius; located automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

impl KotzParams {
    pub fn new(coefficient: f64, exponent: f64, rate: f64, shape: f64) -> Self {
        Self {
            coefficient,
            exponent,
            rate,
            shape,
            kappa: 1.0,
            x0: None,
        }
    }

    /// The radius of a standard bivariate Gaussian pair: `S(r) = exp(-r²/2)`.
    pub fn gaussian() -> Self {
        Self::new(1.0, 0.0, 0.5, 2.0)
    }
}

/// `S(x) = (1 + a x^{-γ}) S_base(x)` on the validity region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEquivParams {
    pub base: Box<ModelDescriptor>,
    pub a: f64,
    pub gamma: f64,
    pub tau: f64,
    /// Constant in the added `A₂(u) = κ u^{-(γ + min(τ, δ))}`.
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub model: ModelDescriptor,
}

/// Finite mixture `F = Σ aᵢ Fᵢ` of laws sharing one scaling function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub components: Vec<MixtureComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Kotz(KotzParams),
    TailEquiv(TailEquivParams),
    Mixture(MixtureParams),
}

/// JSON model descriptor, e.g. `{"family": "kotz", "C": 1, "N": 0, "c": 0.5, "delta": 2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl From<Family> for ModelDescriptor {
    fn from(family: Family) -> Self {
        Self { family, label: None }
    }
}

/// Monotone C¹ continuation of a log-survival tail below its validity radius.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Bridge {
    x0: f64,
    power: f64,
    l0: f64,
    slope_u: f64,
}

impl Bridge {
    /// `l0 = ln S(x0) < 0`, `l1 = (ln S)'(x0) < 0`.
    fn new(x0: f64, l0: f64, l1: f64, natural_power: f64) -> Result<Self> {
        if !(x0 > 0.0 && l0 < 0.0 && l1 < 0.0 && l0.is_finite() && l1.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "cannot bridge at x0={x0}: log-survival {l0}, slope {l1}"
            )));
        }
        // slope ratio in u must not exceed 3 for the cubic to be monotone
        let power = natural_power.max(x0 * l1 / (3.0 * l0));
        Ok(Self {
            x0,
            power,
            l0,
            slope_u: x0 * l1 / power,
        })
    }

    fn log_survival(&self, x: f64) -> f64 {
        let u = (x / self.x0).powf(self.power);
        let lead = (3.0 * self.l0 - self.slope_u).min(0.0);
        (u * u * (lead + (self.slope_u - 2.0 * self.l0) * u)).min(0.0)
    }

    fn hazard(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let u = (x / self.x0).powf(self.power);
        let dl_du = 6.0 * self.l0 * u * (1.0 - u) + self.slope_u * (3.0 * u * u - 2.0 * u);
        -dl_du * self.power * u / x
    }
}

#[derive(Debug)]
enum Inner {
    Kotz {
        p: KotzParams,
        bridge: Option<Bridge>,
    },
    TailEquiv {
        base: RadialModel,
        a: f64,
        gamma: f64,
        tau: f64,
        kappa: f64,
        bridge: Option<Bridge>,
    },
    Mixture {
        components: Vec<(f64, RadialModel)>,
    },
}

/// An immutable, validated radial law. Cheap to clone and share across threads.
#[derive(Debug, Clone)]
pub struct RadialModel {
    descriptor: ModelDescriptor,
    inner: Arc<Inner>,
}

/// Models compare by family and parameters; labels are ignored.
impl PartialEq for RadialModel {
    fn eq(&self, other: &Self) -> bool {
        self.descriptor.family == other.descriptor.family
    }
}

fn kotz_log_tail(p: &KotzParams, x: f64) -> f64 {
    p.coefficient.ln() + p.exponent * x.ln() - p.rate * x.powf(p.shape)
}

fn kotz_tail_hazard(p: &KotzParams, x: f64) -> f64 {
    p.rate * p.shape * x.powf(p.shape - 1.0) - p.exponent / x
}

/// Smallest point of a geometric grid beyond which the tail formula is a
/// valid (≤ 1, nonincreasing) survival function, checked up to underflow.
fn locate_validity_radius(log_tail: &dyn Fn(f64) -> f64, hazard: &dyn Fn(f64) -> f64, scale: f64) -> Result<f64> {
    let start = scale * 1e-4;
    let ratio: f64 = 1.005;
    let mut x = start;
    let mut last_bad: Option<f64> = None;
    for _ in 0..40_000 {
        let l = log_tail(x);
        if l < -745.0 {
            return Ok(match last_bad {
                Some(b) => b * ratio,
                None => start,
            });
        }
        let h = hazard(x);
        if !(l < 0.0 && h > 0.0 && l.is_finite() && h.is_finite()) {
            last_bad = Some(x);
        }
        x *= ratio;
    }
    Err(Error::InvalidModel(format!(
        "tail never decays below the underflow level on [{start}, {x}]"
    )))
}

/// Rejects a declared validity radius if the tail formula exceeds 1 or
/// increases anywhere on `[x0, ∞)` (checked on a fine geometric grid).
fn check_validity_radius(x0: f64, log_tail: &dyn Fn(f64) -> f64, hazard: &dyn Fn(f64) -> f64) -> Result<()> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::InvalidModel(format!("validity radius must be positive, got {x0}")));
    }
    let mut x = x0;
    for _ in 0..40_000 {
        let l = log_tail(x);
        if l < -745.0 {
            return Ok(());
        }
        if !(l < 0.0) || l.is_nan() {
            return Err(Error::InvalidModel(format!("survival exceeds 1 at r={x} (log S = {l})")));
        }
        if !(hazard(x) > 0.0) {
            return Err(Error::InvalidModel(format!("survival is not decreasing at r={x}")));
        }
        x *= 1.005;
    }
    Err(Error::InvalidModel("tail never reaches the underflow level".into()))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RadialModel {
    pub fn from_descriptor(descriptor: ModelDescriptor) -> Result<Self> {
        let inner = match &descriptor.family {
            Family::Kotz(p) => Self::build_kotz(p)?,
            Family::TailEquiv(p) => Self::build_tail_equiv(p)?,
            Family::Mixture(p) => Self::build_mixture(p)?,
        };
        Ok(Self {
            descriptor,
            inner: Arc::new(inner),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: ModelDescriptor =
            serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("model JSON: {e}")))?;
        Self::from_descriptor(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.descriptor).expect("descriptor serializes")
    }

    /// The bivariate-Gaussian radius, `Kotz(1, 0, 1/2, 2)`.
    pub fn gaussian() -> Self {
        make_kotz(KotzParams::gaussian()).expect("gaussian parameters are valid")
    }

    fn build_kotz(p: &KotzParams) -> Result<Inner> {
        positive("C", p.coefficient)?;
        positive("c", p.rate)?;
        positive("delta", p.shape)?;
        if !p.exponent.is_finite() {
            return Err(Error::InvalidModel(format!("N must be finite, got {}", p.exponent)));
        }
        if !(p.kappa >= 0.0 && p.kappa.is_finite()) {
            return Err(Error::InvalidModel(format!("kappa must be nonnegative, got {}", p.kappa)));
        }
        let log_tail = |x: f64| kotz_log_tail(p, x);
        let hazard = |x: f64| kotz_tail_hazard(p, x);
        let exact_from_origin = p.coefficient == 1.0 && p.exponent == 0.0;
        let x0 = match p.x0 {
            Some(x0) if exact_from_origin && x0 == 0.0 => None,
            Some(x0) => {
                check_validity_radius(x0, &log_tail, &hazard)?;
                Some(x0)
            }
            None if exact_from_origin => None,
            None => Some(locate_validity_radius(&log_tail, &hazard, p.rate.powf(-1.0 / p.shape))?),
        };
        let bridge = match x0 {
            Some(x0) => Some(Bridge::new(x0, log_tail(x0), -hazard(x0), p.shape)?),
            None => None,
        };
        Ok(Inner::Kotz { p: p.clone(), bridge })
    }

    fn build_tail_equiv(p: &TailEquivParams) -> Result<Inner> {
        let base = RadialModel::from_descriptor((*p.base).clone())?;
        positive("gamma", p.gamma)?;
        positive("tau", p.tau)?;
        if !p.a.is_finite() {
            return Err(Error::InvalidModel(format!("a must be finite, got {}", p.a)));
        }
        if !(p.kappa >= 0.0 && p.kappa.is_finite()) {
            return Err(Error::InvalidModel(format!("kappa must be nonnegative, got {}", p.kappa)));
        }
        let (a, gamma) = (p.a, p.gamma);
        let log_tail = |x: f64| {
            let factor = 1.0 + a * x.powf(-gamma);
            if factor > 0.0 {
                base.log_survival(x) + factor.ln()
            } else {
                f64::NAN
            }
        };
        let hazard = |x: f64| {
            let t = a * x.powf(-gamma);
            base.hazard(x) + gamma * t / (x * (1.0 + t))
        };
        let bridge = if a == 0.0 && p.x0.is_none() {
            None
        } else {
            let x0 = match p.x0 {
                Some(x0) => {
                    check_validity_radius(x0, &log_tail, &hazard)?;
                    x0
                }
                None => locate_validity_radius(&log_tail, &hazard, base.scale())?,
            };
            Some(Bridge::new(x0, log_tail(x0), -hazard(x0), base.scaling_exponent())?)
        };
        Ok(Inner::TailEquiv {
            base,
            a,
            gamma,
            tau: p.tau,
            kappa: p.kappa,
            bridge,
        })
    }

    fn build_mixture(p: &MixtureParams) -> Result<Inner> {
        if p.components.is_empty() {
            return Err(Error::InvalidModel("mixture needs at least one component".into()));
        }
        let mut components = Vec::with_capacity(p.components.len());
        for c in &p.components {
            positive("mixture weight", c.weight)?;
            components.push((c.weight, RadialModel::from_descriptor(c.model.clone())?));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("mixture weights sum to {total}, expected 1")));
        }
        let reference = &components[0].1;
        let probe_scale = reference.scale();
        for (i, (_, m)) in components.iter().enumerate().skip(1) {
            for k in 0..40 {
                let r = probe_scale * 0.25 * 1.2f64.powi(k);
                let (w0, wi) = (reference.scaling_w(r), m.scaling_w(r));
                if (w0 - wi).abs() > 1e-10 * w0.abs().max(wi.abs()) {
                    return Err(Error::InvalidModel(format!(
                        "component {i} has scaling function {wi} at r={r}, component 0 has {w0}"
                    )));
                }
            }
        }
        Ok(Inner::Mixture { components })
    }

    pub fn descriptor(&self) -> &ModelDescriptor {
        &self.descriptor
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.descriptor.label {
            return l.clone();
        }
        match &*self.inner {
            Inner::Kotz { p, .. } => format!(
                "kotz(C={},N={},c={},delta={})",
                p.coefficient, p.exponent, p.rate, p.shape
            ),
            Inner::TailEquiv { base, a, gamma, .. } => {
                format!("tail_equiv(a={a},gamma={gamma};{})", base.label())
            }
            Inner::Mixture { components } => format!("mixture({} components)", components.len()),
        }
    }

    /// Radius beyond which the closed tail formula holds exactly (0 if it
    /// holds everywhere).
    pub fn validity_radius(&self) -> f64 {
        match &*self.inner {
            Inner::Kotz { bridge, .. } => bridge.map_or(0.0, |b| b.x0),
            Inner::TailEquiv { base, bridge, .. } => bridge.map_or(base.validity_radius(), |b| b.x0),
            Inner::Mixture { components } => components
                .iter()
                .map(|(_, m)| m.validity_radius())
                .fold(0.0, f64::max),
        }
    }

    /// Characteristic radius used to seed searches and integrals.
    pub fn scale(&self) -> f64 {
        match &*self.inner {
            Inner::Kotz { p, .. } => p.rate.powf(-1.0 / p.shape),
            Inner::TailEquiv { base, .. } => base.scale(),
            Inner::Mixture { components } => components.iter().map(|(_, m)| m.scale()).fold(0.0, f64::max),
        }
    }

    /// Exponent δ of the power scaling function `w(u) = cδu^{δ-1}`.
    pub fn scaling_exponent(&self) -> f64 {
        match &*self.inner {
            Inner::Kotz { p, .. } => p.shape,
            Inner::TailEquiv { base, .. } => base.scaling_exponent(),
            Inner::Mixture { components } => components[0].1.scaling_exponent(),
        }
    }

    /// Rate `c` of the power scaling function.
    pub fn scaling_rate(&self) -> f64 {
        match &*self.inner {
            Inner::Kotz { p, .. } => p.rate,
            Inner::TailEquiv { base, .. } => base.scaling_rate(),
            Inner::Mixture { components } => components[0].1.scaling_rate(),
        }
    }

    /// Gumbel-MDA scaling function `w(u)`.
    pub fn scaling_w(&self, u: f64) -> f64 {
        match &*self.inner {
            Inner::Kotz { p, .. } => p.rate * p.shape * u.powf(p.shape - 1.0),
            Inner::TailEquiv { base, .. } => base.scaling_w(u),
            Inner::Mixture { components } => components[0].1.scaling_w(u),
        }
    }

    /// `h(u) = u·w(u)`, which grows without bound for every Gumbel-type law.
    pub fn h(&self, u: f64) -> f64 {
        u * self.scaling_w(u)
    }

    /// Order `A(u)` of the second-order remainder, with the model's constants.
    pub fn second_order_a(&self, u: f64) -> f64 {
        match &*self.inner {
            Inner::Kotz { p, .. } => p.kappa * u.powf(-p.shape),
            Inner::TailEquiv {
                base,
                gamma,
                tau,
                kappa,
                ..
            } => {
                let delta = base.scaling_exponent();
                base.second_order_a(u) + kappa * u.powf(-(gamma + tau.min(delta)))
            }
            Inner::Mixture { components } => components.iter().map(|(_, m)| m.second_order_a(u)).sum(),
        }
    }

    /// Log of the von Mises reference tail `1 - F*`.
    fn log_von_mises_tail(&self, x: f64) -> f64 {
        match &*self.inner {
            Inner::Kotz { p, .. } => p.exponent * x.ln() - p.rate * x.powf(p.shape),
            Inner::TailEquiv { base, .. } => base.log_von_mises_tail(x),
            Inner::Mixture { components } => components[0].1.log_von_mises_tail(x),
        }
    }

    /// Factor `d(x)` in `1 - F(x) = d(x)[1 - F*(x)]`. For Kotz laws the von
    /// Mises tail is `x^N exp(-c x^δ)`, so `d = C` beyond the validity radius.
    pub fn von_mises_d(&self, x: f64) -> f64 {
        (self.log_survival(x) - self.log_von_mises_tail(x)).exp()
    }

    /// Hazard `-(ln S)'(r)`.
    pub fn hazard(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match &*self.inner {
            Inner::Kotz { p, bridge } => match bridge {
                Some(b) if r < b.x0 => b.hazard(r),
                _ => kotz_tail_hazard(p, r),
            },
            Inner::TailEquiv {
                base, a, gamma, bridge, ..
            } => match bridge {
                Some(b) if r < b.x0 => b.hazard(r),
                _ => {
                    let t = a * r.powf(-gamma);
                    base.hazard(r) + gamma * t / (r * (1.0 + t))
                }
            },
            Inner::Mixture { components } => {
                let logs: Vec<f64> = components.iter().map(|(w, m)| w.ln() + m.log_survival(r)).collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    return components.iter().map(|(_, m)| m.hazard(r)).fold(0.0, f64::max);
                }
                let mut num = 0.0;
                let mut den = 0.0;
                for ((_, m), l) in components.iter().zip(&logs) {
                    let wgt = (l - top).exp();
                    num += wgt * m.hazard(r);
                    den += wgt;
                }
                num / den
            }
        }
    }

    /// Radius `r` with `S(r) = p`, by bracketed Newton iteration on `ln S`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Quantile(format!("probability must lie in (0, 1], got {p}")));
        }
        if p == 1.0 {
            return Ok(0.0);
        }
        let target = p.ln();
        let mut lo = 0.0;
        let mut hi = self.scale();
        let mut guard = 0;
        while self.log_survival(hi) > target {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 1100 {
                return Err(Error::Quantile(format!("no upper bracket for p={p}")));
            }
        }
        let mut r = 0.5 * (lo + hi);
        for _ in 0..300 {
            let f = self.log_survival(r) - target;
            if f > 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            let h = self.hazard(r);
            let newton = r + f / h;
            let next = if h > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - r).abs() <= 1e-14 * r.abs() || hi - lo <= 1e-14 * hi {
                return Ok(next);
            }
            r = next;
        }
        Err(Error::Quantile(format!("no convergence for p={p}")))
    }

    /// `S(u + s/w(u)) / S(u)`, which tends to `e^{-s}` in the Gumbel domain.
    pub fn gumbel_ratio(&self, u: f64, s: f64) -> f64 {
        (self.log_survival(u + s / self.scaling_w(u)) - self.log_survival(u)).exp()
    }
}

impl Survival for RadialModel {
    fn log_survival(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match &*self.inner {
            Inner::Kotz { p, bridge } => match bridge {
                Some(b) if r < b.x0 => b.log_survival(r),
                _ => kotz_log_tail(p, r),
            },
            Inner::TailEquiv {
                base, a, gamma, bridge, ..
            } => match bridge {
                Some(b) if r < b.x0 => b.log_survival(r),
                _ => base.log_survival(r) + (a * r.powf(-gamma)).ln_1p(),
            },
            Inner::Mixture { components } => {
                let logs: Vec<f64> = components.iter().map(|(w, m)| w.ln() + m.log_survival(r)).collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    return top;
                }
                top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
            }
        }
    }
}

impl Serialize for RadialModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.descriptor.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RadialModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = ModelDescriptor::deserialize(d)?;
        RadialModel::from_descriptor(desc).map_err(serde::de::Error::custom)
    }
}

pub fn make_kotz(params: KotzParams) -> Result<RadialModel> {
    RadialModel::from_descriptor(Family::Kotz(params).into())
}

/// Perturbs `base` by the factor `1 + a x^{-γ}` with remainder order `x^{-τγ}`.
pub fn make_tail_equivalent(base: &RadialModel, a: f64, gamma: f64, tau: f64) -> Result<RadialModel> {
    RadialModel::from_descriptor(
        Family::TailEquiv(TailEquivParams {
            base: Box::new(base.descriptor().clone()),
            a,
            gamma,
            tau,
            kappa: 1.0,
            x0: None,
        })
        .into(),
    )
}

pub fn make_mixture(components: &[(f64, RadialModel)]) -> Result<RadialModel> {
    RadialModel::from_descriptor(
        Family::Mixture(MixtureParams {
            components: components
                .iter()
                .map(|(w, m)| MixtureComponent {
                    weight: *w,
                    model: m.descriptor().clone(),
                })
                .collect(),
        })
        .into(),
    )
}

/// Alternative scaling function `w̄(x) = S(x) / ∫ₓ^∞ S(s) ds`.
pub fn alt_scaling<S: Survival + ?Sized>(model: &S, x: f64) -> Result<f64> {
    let lx = model.log_survival(x);
    if !lx.is_finite() {
        return Err(Error::InvalidParameter(format!("survival vanishes at x={x}")));
    }
    // local hazard sets the length scale of the substitution
    let dx = 1e-4 * x.abs().max(1e-3);
    let local = (lx - model.log_survival(x + dx)) / dx;
    let scale = if local > 0.0 && local.is_finite() { 1.0 / local } else { x.abs().max(1.0) };
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-12,
        max_evals: 1_000_000,
    };
    let tail = integrate_semi_infinite(|v| (model.log_survival(x + v) - lx).exp(), 0.0, scale, &tol)?;
    if !(tail.value > 0.0 && tail.value.is_finite()) {
        return Err(Error::Quadrature {
            evaluations: tail.evaluations,
            error: tail.abs_error_estimate,
            target: tol.rel,
        });
    }
    Ok(1.0 / tail.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_sf;
    use std::f64::consts::PI;

    fn kotz(c_: f64, n: f64, c: f64, d: f64) -> RadialModel {
        make_kotz(KotzParams::new(c_, n, c, d)).unwrap()
    }

    #[test]
    fn kotz_examples() {
        let g = RadialModel::gaussian();
        assert!((g.survival(1.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((g.scaling_w(2.0) - 2.0).abs() < 1e-15);
        assert!((g.quantile((-2.0f64).exp()).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(g.validity_radius(), 0.0);
        assert_eq!(g.survival(0.0), 1.0);
        assert!((g.second_order_a(3.0) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn kotz_rejects_bad_parameters() {
        for p in [
            KotzParams::new(0.0, 0.0, 1.0, 1.0),
            KotzParams::new(1.0, 0.0, -1.0, 1.0),
            KotzParams::new(1.0, 0.0, 1.0, 0.0),
            KotzParams::new(1.0, f64::NAN, 1.0, 1.0),
        ] {
            assert!(make_kotz(p).is_err());
        }
        // S(1) = 2e^{-1/2} > 1, so a declared x0 = 1 is not a valid radius
        let mut p = KotzParams::new(2.0, 0.0, 0.5, 2.0);
        p.x0 = Some(1.0);
        assert!(matches!(make_kotz(p.clone()), Err(Error::InvalidModel(_))));
        p.x0 = Some(3.0);
        assert!(make_kotz(p).is_ok());
        // increasing part of x^3 e^{-x}
        let mut p = KotzParams::new(0.01, 3.0, 1.0, 1.0);
        p.x0 = Some(1.0);
        assert!(make_kotz(p).is_err());
    }

    #[test]
    fn bridge_is_monotone_and_c1() {
        for (c_, n, c, d) in [(1.0, 1.0, 0.5, 2.0), (3.0, 2.0, 1.0, 1.0), (0.5, 0.0, 2.0, 4.0), (1.0, -1.0, 1.0, 6.0)] {
            let m = kotz(c_, n, c, d);
            let x0 = m.validity_radius();
            assert!(x0 > 0.0);
            let mut prev = 0.0;
            for k in 1..=4000 {
                let r = x0 * 3.0 * k as f64 / 4000.0;
                let l = m.log_survival(r);
                assert!(l <= prev + 1e-15 && l <= 0.0, "non-monotone at {r} (x0={x0}, l={l}, prev={prev}, {c_} {n} {c} {d})");
                prev = l;
            }
            let eps = 1e-9 * x0;
            let below = m.log_survival(x0 - eps);
            let above = m.log_survival(x0 + eps);
            assert!((m.log_survival(x0) - kotz_log_tail(&KotzParams::new(c_, n, c, d), x0)).abs() < 1e-12);
            let slope = (above - below) / (2.0 * eps);
            assert!((slope + m.hazard(x0)).abs() < 1e-5 * m.hazard(x0).max(-m.log_survival(x0) / x0), "{slope} vs {} at {x0}", m.hazard(x0));
        }
    }

    #[test]
    fn quantile_inverts_survival() {
        let models = [
            RadialModel::gaussian(),
            kotz(1.0, 1.0, 0.5, 2.0),
            kotz(2.0, -0.5, 1.0, 1.0),
            make_tail_equivalent(&RadialModel::gaussian(), 0.3, 1.0, 1.0).unwrap(),
        ];
        for m in &models {
            for r in [0.05, 0.3, 1.0, 2.5, 6.0, 12.0] {
                let s = m.survival(r);
                // survival rounds to 1 deep inside a steep bridge
                if s <= 1e-300 || s > 1.0 - 1e-9 {
                    continue;
                }
                let q = m.quantile(s).unwrap();
                assert!(((q - r) / r).abs() < 1e-10, "{}: r={r} q={q}", m.label());
            }
        }
    }

    #[test]
    fn scaling_grows_faster_than_inverse_radius() {
        for m in [RadialModel::gaussian(), kotz(1.0, 0.0, 1.0, 0.5), kotz(1.0, 2.0, 1.0, 1.0)] {
            let hs: Vec<f64> = (0..8).map(|k| m.h(10f64.powi(k))).collect();
            assert!(hs.windows(2).all(|w| w[1] > w[0]));
            assert!(hs[7] > 1e3);
        }
    }

    #[test]
    fn gumbel_limit() {
        for m in [RadialModel::gaussian(), kotz(2.0, 1.5, 0.3, 1.5), kotz(1.0, 0.0, 1.0, 1.0)] {
            for s in [0.5, 1.0, 2.0] {
                let errs: Vec<f64> = [5.0, 20.0, 80.0]
                    .iter()
                    .map(|u| (m.gumbel_ratio(*u, s) - (-s).exp()).abs())
                    .collect();
                assert!(errs[2] <= errs[0] + 1e-15 && errs[2] < 0.01, "{errs:?}");
            }
        }
    }

    #[test]
    fn assumption_a1_bound() {
        // |S(u+s/w)/S(u) - e^{-s}| ≤ A(u)·B̄(s) with B̄(s) = 4(1+s)²e^{-s}·(1+|N|)/c
        for (c_, n, c, d) in [(1.0, 0.0, 0.5, 2.0), (2.0, 1.0, 0.5, 2.0), (1.0, -1.0, 1.0, 1.5)] {
            let m = kotz(c_, n, c, d);
            for u in [4.0, 8.0, 16.0, 32.0] {
                for s in [0.0, 0.5, 1.0, 2.0, 5.0] {
                    let resid = (m.gumbel_ratio(u, s) - (-s).exp()).abs();
                    let bound = m.second_order_a(u) * 4.0 * (1.0 + s).powi(2) * (-s).exp() * (1.0 + n.abs()) / c;
                    assert!(resid <= bound, "u={u} s={s}: {resid} > {bound}");
                }
            }
        }
    }

    #[test]
    fn von_mises_factor_converges() {
        let m = kotz(2.5, 1.0, 0.5, 2.0);
        assert!((m.von_mises_d(10.0) - 2.5).abs() < 1e-12);
        let te = make_tail_equivalent(&RadialModel::gaussian(), 0.4, 1.0, 1.0).unwrap();
        for x in [10.0, 100.0, 1000.0] {
            // ln S is of order x², so the difference of logs carries ~x²·ε error
            assert!((te.von_mises_d(x) - (1.0 + 0.4 / x)).abs() < 1e-9);
        }
    }

    #[test]
    fn tail_equivalent_examples() {
        let g = RadialModel::gaussian();
        let same = make_tail_equivalent(&g, 0.0, 1.0, 1.0).unwrap();
        for r in [0.0, 0.5, 1.0, 3.0, 7.0] {
            assert_eq!(same.survival(r), g.survival(r));
        }
        let te = make_tail_equivalent(&g, 0.1, 1.0, 1.0).unwrap();
        let expected = 1.01 * (-50.0f64).exp();
        assert!(((te.survival(10.0) - expected) / expected).abs() < 1e-13);
        for x in [10.0, 100.0, 1000.0] {
            let ratio = (te.log_survival(x) - g.log_survival(x)).exp();
            assert!((ratio - 1.0).abs() <= 0.1 / x * (1.0 + 1e-12));
        }
        // A picks up u^{-(γ + min(τ, δ))}
        assert!((te.second_order_a(10.0) - (1e-2 + 1e-2)).abs() < 1e-15);
        // 1 - 2/x is negative near the origin, so the formula only holds beyond a bridge
        let neg = make_tail_equivalent(&g, -2.0, 1.0, 1.0).unwrap();
        assert!(neg.validity_radius() > 2.0);
        assert!(neg.survival(0.0) == 1.0 && neg.survival(1.0) <= 1.0);
    }

    #[test]
    fn tail_equivalent_rejects_invalid_region() {
        let g = RadialModel::gaussian();
        let desc = ModelDescriptor::from(Family::TailEquiv(TailEquivParams {
            base: Box::new(g.descriptor().clone()),
            a: 5.0,
            gamma: 1.0,
            tau: 1.0,
            kappa: 1.0,
            x0: Some(0.5),
        }));
        assert!(matches!(RadialModel::from_descriptor(desc), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn mixture_examples() {
        let g = RadialModel::gaussian();
        let single = make_mixture(&[(1.0, g.clone())]).unwrap();
        let double = make_mixture(&[(0.5, g.clone()), (0.5, g.clone())]).unwrap();
        for r in [0.1, 1.0, 4.0, 9.0] {
            assert!((single.survival(r) - g.survival(r)).abs() <= 1e-15 * g.survival(r));
            assert!((double.survival(r) - g.survival(r)).abs() <= 1e-14 * g.survival(r));
        }
        let k1 = kotz(1.0, 1.0, 0.5, 2.0);
        let mix = make_mixture(&[(0.5, g.clone()), (0.5, k1.clone())]).unwrap();
        for x in [2.0, 3.0, 5.0, 8.0] {
            assert!(x > k1.validity_radius());
            let expected = 0.5 * (1.0 + x) * (-0.5 * x * x).exp();
            assert!(((mix.survival(x) - expected) / expected).abs() < 1e-13);
        }
        assert!((mix.second_order_a(2.0) - 0.5).abs() < 1e-15);
        // weights and scaling-function checks
        assert!(make_mixture(&[(0.5, g.clone()), (0.4, g.clone())]).is_err());
        assert!(make_mixture(&[(0.5, g.clone()), (0.5, kotz(1.0, 0.0, 1.0, 2.0))]).is_err());
        assert!(make_mixture(&[]).is_err());
    }

    #[test]
    fn mixture_quantile() {
        let mix = make_mixture(&[(0.3, RadialModel::gaussian()), (0.7, kotz(1.0, 2.0, 0.5, 2.0))]).unwrap();
        for p in [0.9, 0.5, 1e-3, 1e-12] {
            let q = mix.quantile(p).unwrap();
            assert!(((mix.survival(q) - p) / p).abs() < 1e-10);
        }
    }

    #[test]
    fn alt_scaling_examples() {
        let g = RadialModel::gaussian();
        // w̄(x) = φ(x)/(1-Φ(x)) for the Gaussian radius tail
        let mills = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt() / norm_sf(x);
        let w5 = alt_scaling(&g, 5.0).unwrap();
        assert!(((w5 - mills(5.0)) / mills(5.0)).abs() < 1e-10);
        assert!((w5 / 5.0 - 1.0).abs() < 0.05);
        let ratios: Vec<f64> = [5.0, 10.0, 20.0].iter().map(|x| alt_scaling(&g, *x).unwrap() / x).collect();
        assert!(ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
        let expo = kotz(1.0, 0.0, 1.0, 1.0);
        for x in [0.5, 3.0, 40.0] {
            assert!((alt_scaling(&expo, x).unwrap() - 1.0).abs() < 1e-10);
        }
        // user-supplied tail
        let user = SurvivalFn(|r: f64| (-r * r * (1.0 + 1.0 / (1.0 + r))).exp());
        let w = alt_scaling(&user, 20.0).unwrap();
        assert!((w / 40.0 - 1.0).abs() < 0.1);
        let bounded = SurvivalFn(|r: f64| if r < 1.0 { (1.0 - r).powi(2) } else { 0.0 });
        assert!(alt_scaling(&bounded, 2.0).is_err());
    }

    #[test]
    fn json_descriptor() {
        let m = RadialModel::from_json(r#"{"family":"kotz","C":1,"N":0,"c":0.5,"delta":2,"label":"gaussian"}"#).unwrap();
        assert_eq!(m.label(), "gaussian");
        assert_eq!(m, RadialModel::gaussian());
        let mix = make_mixture(&[
            (0.25, make_tail_equivalent(&m, 0.1, 1.5, 2.0).unwrap()),
            (0.75, kotz(1.0, 1.0, 0.5, 2.0)),
        ])
        .unwrap();
        let back = RadialModel::from_json(&mix.to_json()).unwrap();
        assert_eq!(back.descriptor(), mix.descriptor());
        assert!(RadialModel::from_json(r#"{"family":"weibull"}"#).is_err());
        assert!(RadialModel::from_json(r#"{"family":"kotz","C":1,"N":0,"c":-1,"delta":2}"#).is_err());
    }
}
