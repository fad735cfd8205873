//! Semiparametric estimation of the conditional excess survival
//! `Ψ(y, x) = P(Y > y | X > x)` and its quantile function, for radial laws
//! with power scaling function `w(u) = cδu^{δ-1}`.
//!
//! The fitted pieces are the Pearson correlation `ρ̂`, the pair `(ĉ, δ̂)` from
//! a regression on the upper order statistics of one channel, and a
//! parametric marginal tail spliced onto the empirical one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::marginal_survival_exact;
use crate::exec::{map_indices, Execution};
use crate::pair::EllipticalPair;
use crate::radial::Survival;
use crate::simulation::{pearson, sample_pairs, z_transform, SampleSet};
use crate::special::norm_sf;

/// Exceedances required before the empirical marginal survival is trusted.
pub const MIN_EXCEEDANCES: usize = 10;

/// Which sample feeds the tail regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Channel {
    X,
    /// `Z = (ζX + Y)/√(ζ² + 2ζρ̂ + 1)`.
    Z(f64),
}

/// Form assumed for the marginal tail in the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TailForm {
    /// `P(X > u) ≈ exp(-c u^δ)`.
    Plain,
    /// `P(X > u) ≈ exp(-c u^δ)/√(2π cδ u^δ)`, the marginal of a radius with
    /// tail `exp(-c u^δ)`.
    #[default]
    Berman,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Defaults to [`default_k_top`].
    pub k_top: Option<usize>,
    pub channel: Channel,
    pub form: TailForm,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            k_top: None,
            channel: Channel::X,
            form: TailForm::Berman,
        }
    }
}

/// Parametric marginal tail `Ĉ u^{N̂} exp(-ĉ u^δ̂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailScale {
    pub coefficient: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub rho_hat: f64,
    pub c_hat: f64,
    pub delta_hat: f64,
    pub tail_scale: Option<TailScale>,
    pub k_top: usize,
    pub n: usize,
    /// Root-mean-square residual of the regression.
    pub residual: f64,
    /// Smallest order statistic used in the regression.
    pub threshold: f64,
    /// Level above which the marginal survival of `X` switches from empirical
    /// to parametric.
    pub splice_point: f64,
    pub channel: Channel,
    pub form: TailForm,
}

impl FittedModel {
    /// `ŵ(u) = ĉδ̂u^{δ̂-1}`.
    pub fn w(&self, u: f64) -> f64 {
        self.c_hat * self.delta_hat * u.powf(self.delta_hat - 1.0)
    }

    /// Fitted parametric `ln P(X > u)`.
    pub fn log_marginal_tail(&self, u: f64) -> f64 {
        let ts = self.tail_scale.unwrap_or(TailScale {
            coefficient: 1.0,
            exponent: 0.0,
        });
        ts.coefficient.ln() + ts.exponent * u.ln() - self.c_hat * u.powf(self.delta_hat)
    }
}

/// `⌈2√n⌉` clamped to `[30, n/2]`.
pub fn default_k_top(n: usize) -> usize {
    let k = (2.0 * (n as f64).sqrt()).ceil() as usize;
    k.clamp(30, (n / 2).max(30))
}

/// Pearson sample correlation of the pairs.
pub fn estimate_rho(s: &SampleSet) -> Result<f64> {
    if s.len() < 10 {
        return Err(Error::Estimation(format!("need at least 10 pairs, got {}", s.len())));
    }
    pearson(&s.xs(), &s.ys()).ok_or_else(|| Error::Estimation("a coordinate has zero variance".into()))
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, rms residual)`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

/// Fits `(ĉ, δ̂)` from the top `k` order statistics `v` (descending) of a
/// sample of size `n`, using plotting positions `i/(n+1)`.
pub fn fit_order_statistics(top: &[f64], n: usize, form: TailForm) -> Result<(f64, f64, f64)> {
    let k = top.len();
    if k < 3 {
        return Err(Error::Estimation(format!("need at least 3 order statistics, got {k}")));
    }
    if !(top[k - 1] > 0.0) {
        return Err(Error::Estimation(format!(
            "fit region reaches nonpositive values ({}); reduce k_top",
            top[k - 1]
        )));
    }
    if top.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Estimation("order statistics are not sorted in decreasing order".into()));
    }
    let lx: Vec<f64> = top.iter().map(|v| v.ln()).collect();
    let neg_log_s: Vec<f64> = (1..=k).map(|i| -(i as f64 / (n as f64 + 1.0)).ln()).collect();
    let ly: Vec<f64> = neg_log_s.iter().map(|t| t.ln()).collect();
    let (mut a, mut b, mut rms) = least_squares(&lx, &ly);
    if form == TailForm::Berman {
        for _ in 0..100 {
            if !(b > 0.0) {
                break;
            }
            let (c, d) = (a.exp(), b);
            let mut adjusted = Vec::with_capacity(k);
            for (t, v) in neg_log_s.iter().zip(top) {
                let inner = t - 0.5 * (2.0 * PI * c * d * v.powf(d)).ln();
                if !(inner > 0.0) {
                    return Err(Error::Estimation(format!(
                        "tail correction breaks down at {v}; the fit region is not in the tail"
                    )));
                }
                adjusted.push(inner.ln());
            }
            let (a2, b2, r2) = least_squares(&lx, &adjusted);
            let done = (a2 - a).abs() < 1e-12 && (b2 - b).abs() < 1e-12;
            (a, b, rms) = (a2, b2, r2);
            if done {
                break;
            }
        }
    }
    if !(b > 0.0 && b.is_finite() && a.is_finite()) {
        return Err(Error::Estimation(format!("fitted exponent δ̂ = {b} is not positive")));
    }
    Ok((a.exp(), b, rms))
}

fn descending(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Fits the scaling function and the marginal tail of `X`.
pub fn fit_scaling(s: &SampleSet, opts: &FitOptions) -> Result<FittedModel> {
    let n = s.len();
    if n < 60 {
        return Err(Error::Estimation(format!("need at least 60 pairs, got {n}")));
    }
    let k = opts.k_top.unwrap_or_else(|| default_k_top(n));
    if !(30..=n / 2).contains(&k) {
        return Err(Error::Estimation(format!("k_top must lie in [30, {}], got {k}", n / 2)));
    }
    let rho_hat = estimate_rho(s)?;
    let values = match opts.channel {
        Channel::X => s.xs(),
        Channel::Z(zeta) => z_transform(s, zeta, rho_hat)?,
    };
    let sorted = descending(values);
    let (c_hat, delta_hat, residual) = fit_order_statistics(&sorted[..k], n, opts.form)?;
    let xs = descending(s.xs());
    let splice_point = xs[MIN_EXCEEDANCES - 1];
    let exponent = match opts.form {
        TailForm::Plain => 0.0,
        TailForm::Berman => -0.5 * delta_hat,
    };
    let level = MIN_EXCEEDANCES as f64 / (n as f64 + 1.0);
    let coefficient = level / (exponent * splice_point.ln() - c_hat * splice_point.powf(delta_hat)).exp();
    Ok(FittedModel {
        rho_hat,
        c_hat,
        delta_hat,
        tail_scale: Some(TailScale { coefficient, exponent }),
        k_top: k,
        n,
        residual,
        threshold: sorted[k - 1],
        splice_point,
        channel: opts.channel,
        form: opts.form,
    })
}

/// Estimator variant: `1` uses the fitted radial tail inside `g₁`, `2` the
/// spliced marginal survival of `X` inside `g₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    One,
    Two,
}

impl TryFrom<u8> for Variant {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Variant::One),
            2 => Ok(Variant::Two),
            _ => Err(Error::InvalidParameter(format!("variant must be 1 or 2, got {v}"))),
        }
    }
}

/// The ingredients substituted into the estimator: fitted, or the true law.
#[derive(Debug, Clone)]
pub enum PlugIn<'a> {
    Fitted { fit: &'a FittedModel, sample: &'a SampleSet },
    Oracle { pair: &'a EllipticalPair, tol: f64 },
}

impl PlugIn<'_> {
    fn rho(&self) -> f64 {
        match self {
            PlugIn::Fitted { fit, .. } => fit.rho_hat,
            PlugIn::Oracle { pair, .. } => pair.rho(),
        }
    }

    fn w(&self, u: f64) -> f64 {
        match self {
            PlugIn::Fitted { fit, .. } => fit.w(u),
            PlugIn::Oracle { pair, .. } => pair.model().scaling_w(u),
        }
    }

    /// `ln S(b) - ln S(a)` for the radial tail. The fitted radial tail is
    /// `exp(-ĉu^δ̂)` up to a constant that cancels.
    fn radial_log_ratio(&self, b: f64, a: f64) -> f64 {
        match self {
            PlugIn::Fitted { fit, .. } => -fit.c_hat * (b.powf(fit.delta_hat) - a.powf(fit.delta_hat)),
            PlugIn::Oracle { pair, .. } => pair.model().log_survival(b) - pair.model().log_survival(a),
        }
    }

    /// `P(X > u)`: empirical where enough exceedances exist, parametric
    /// beyond (or exact for the oracle).
    fn marginal(&self, u: f64) -> Result<f64> {
        match self {
            PlugIn::Fitted { fit, sample } => {
                let hits = sample.pairs.iter().filter(|p| p.0 > u).count();
                if hits >= MIN_EXCEEDANCES {
                    Ok(hits as f64 / sample.len() as f64)
                } else {
                    Ok(fit.log_marginal_tail(u).exp())
                }
            }
            PlugIn::Oracle { pair, tol } => Ok(marginal_survival_exact(pair, u, *tol)?.value),
        }
    }

    fn sample(&self) -> Option<&SampleSet> {
        match self {
            PlugIn::Fitted { sample, .. } => Some(sample),
            PlugIn::Oracle { .. } => None,
        }
    }
}

/// Constants of the diagonal direction `a = 1` for correlation `ρ ∈ (-1, 1)`:
/// `α = √(2/(1+ρ))`, `K = (1-ρ²)^{3/2}/(1-ρ)²`, `λ = 1/√(2(1+ρ))`.
pub fn diagonal_constants(rho: f64) -> Result<(f64, f64, f64)> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Estimation(format!("ρ̂ = {rho} must lie in (-1, 1)")));
    }
    let alpha = (2.0 / (1.0 + rho)).sqrt();
    let k = (1.0 - rho * rho).powf(1.5) / (1.0 - rho).powi(2);
    let lambda = 1.0 / (2.0 * (1.0 + rho)).sqrt();
    Ok((alpha, k, lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiEstimate {
    pub value: f64,
    /// `ĝ*` such that `Ψ̂(y, x) = ĝ* exp(-λ̂ŵ(α̂x)(y - x))`.
    pub g_star: f64,
    /// Decay rate `λ̂ŵ(α̂x)` of `Ψ̂` in `y`.
    pub slope: f64,
    pub clamped: bool,
    /// `y < x`: replaced by the empirical conditional frequency.
    pub fallback: bool,
    /// `x` lies below the smallest order statistic of the fit.
    pub below_fit_region: bool,
}

fn g_star(plug: &PlugIn<'_>, variant: Variant, x: f64) -> Result<(f64, f64)> {
    let (alpha, k, lambda) = diagonal_constants(plug.rho())?;
    let ax = alpha * x;
    let w_ax = plug.w(ax);
    let g = match variant {
        Variant::One => (plug.w(x) / ax).sqrt() / w_ax * plug.radial_log_ratio(ax, x).exp(),
        Variant::Two => {
            let den = plug.marginal(x)?;
            if !(den > 0.0) {
                return Err(Error::Estimation(format!("estimated P(X > {x}) is zero")));
            }
            plug.marginal(ax)? / ((x * w_ax).sqrt() * den)
        }
    };
    let g_star = alpha.powf(1.5) * k / (2.0 * PI).sqrt() * g;
    Ok((g_star, lambda * w_ax))
}

/// `Ψ̂(y, x) = α̂^{3/2}K̂/√(2π) · exp(-λ̂ŵ(α̂x)(y - x)) · ĝ(α̂, x)` with any plug-in.
pub fn psi_hat_with(plug: &PlugIn<'_>, variant: Variant, x: f64, y: f64) -> Result<PsiEstimate> {
    if !(x > 0.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::InvalidParameter(format!("need finite x > 0 and y, got ({x}, {y})")));
    }
    let below_fit_region = matches!(plug, PlugIn::Fitted { fit, .. } if x < fit.threshold);
    let (g_star, slope) = g_star(plug, variant, x)?;
    if y < x {
        let s = plug.sample().ok_or_else(|| {
            Error::Estimation("y < x needs a sample for the empirical conditional frequency".into())
        })?;
        let above = s.pairs.iter().filter(|p| p.0 > x).count();
        if above < MIN_EXCEEDANCES {
            return Err(Error::Estimation(format!(
                "y < x and only {above} exceedances of x; the shifted form needs y ≥ x"
            )));
        }
        let both = s.pairs.iter().filter(|p| p.0 > x && p.1 > y).count();
        return Ok(PsiEstimate {
            value: both as f64 / above as f64,
            g_star,
            slope,
            clamped: false,
            fallback: true,
            below_fit_region,
        });
    }
    let raw = g_star * (-slope * (y - x)).exp();
    Ok(PsiEstimate {
        value: raw.clamp(0.0, 1.0),
        g_star,
        slope,
        clamped: !(0.0..=1.0).contains(&raw),
        fallback: false,
        below_fit_region,
    })
}

/// Plug-in estimate of `P(Y > y | X > x)` from a fitted model.
pub fn psi_hat(s: &SampleSet, variant: Variant, x: f64, y: f64, fit: &FittedModel) -> Result<PsiEstimate> {
    psi_hat_with(&PlugIn::Fitted { fit, sample: s }, variant, x, y)
}

/// `ŷ` with `Ψ̂(ŷ, x) = 1 - q`: `x + (ln ĝ* - ln(1 - q))/(λ̂ŵ(α̂x))`.
pub fn quantile_hat_with(plug: &PlugIn<'_>, variant: Variant, q: f64, x: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("q must lie in (0, 1), got {q}")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("need finite x > 0, got {x}")));
    }
    let (g_star, slope) = g_star(plug, variant, x)?;
    if !(g_star > 0.0) {
        return Err(Error::Estimation(format!("ĝ* = {g_star} is not positive")));
    }
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(Error::Estimation(format!("decay rate {slope} is not positive")));
    }
    let y = x + (g_star.ln() - (1.0 - q).ln()) / slope;
    if y < x {
        return Err(Error::Estimation(format!(
            "1 - q = {} exceeds ĝ* = {g_star}: the quantile would fall below x",
            1.0 - q
        )));
    }
    Ok(y)
}

/// Conditional quantile estimate from a fitted model.
pub fn quantile_hat(s: &SampleSet, variant: Variant, q: f64, x: f64, fit: &FittedModel) -> Result<f64> {
    quantile_hat_with(&PlugIn::Fitted { fit, sample: s }, variant, q, x)
}

/// Joint estimate from the central expansion: the spliced marginal
/// `P̂(X > x)` times `1 - Φ(z)`, at `ŷ = x[ρ̂ + z√(1-ρ̂²)/√ĥ + ρ̂/ĥ]` with
/// `ĥ = xŵ(x)`. Returns `(value, ŷ)`.
pub fn joint_hat_central(s: &SampleSet, fit: &FittedModel, x: f64, z: f64) -> Result<(f64, f64)> {
    let plug = PlugIn::Fitted { fit, sample: s };
    let rho = fit.rho_hat;
    let h = x * fit.w(x);
    if !(h > 1.0) {
        return Err(Error::Estimation(format!("ĥ(x) = {h} ≤ 1 at x = {x}")));
    }
    let y = x * (rho + z * (1.0 - rho * rho).sqrt() / h.sqrt() + rho / h);
    Ok((plug.marginal(x)? * norm_sf(z), y))
}

/// One replication of a consistency study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub seed: u64,
    pub rho_hat: f64,
    pub c_hat: f64,
    pub delta_hat: f64,
}

/// Fits `reps` independent samples of size `n` (seeds `seed0, seed0 + 1, …`).
pub fn replicate_fits(
    pair: &EllipticalPair,
    n: usize,
    reps: usize,
    seed0: u64,
    opts: &FitOptions,
    exec: Execution,
) -> Result<Vec<Replication>> {
    let out = map_indices(exec, reps, |r| -> Result<Replication> {
        let seed = seed0 + r as u64;
        let s = sample_pairs(pair, n, seed, Execution::Sequential)?;
        let fit = fit_scaling(&s, opts)?;
        Ok(Replication {
            seed,
            rho_hat: fit.rho_hat,
            c_hat: fit.c_hat,
            delta_hat: fit.delta_hat,
        })
    });
    out.into_iter().collect()
}

/// Median of a nonempty slice.
pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Oracle model used by tests and diagnostics: the true pair as plug-in.
pub fn oracle<'a>(pair: &'a EllipticalPair, tol: f64) -> PlugIn<'a> {
    PlugIn::Oracle { pair, tol }
}
