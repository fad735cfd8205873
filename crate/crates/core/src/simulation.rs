//! Exact sampling of the elliptical pair and the Monte Carlo helpers used to
//! validate probabilities and feed the estimators.
//!
//! Samples are produced in fixed-size chunks; chunk `i` draws from stream `i`
//! of a ChaCha8 generator seeded with the user seed, so the output is the
//! same for every thread count and execution strategy.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::{count_where, map_indices, Execution};
use crate::pair::EllipticalPair;

/// Pairs per generator stream.
pub const CHUNK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub pairs: Vec<(f64, f64)>,
    pub seed: u64,
    pub model_label: String,
    pub rho_true: Option<f64>,
}

impl SampleSet {
    /// Wraps externally supplied pairs (e.g. read from a file).
    pub fn from_pairs(pairs: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(invalid("sample is empty"));
        }
        if let Some(i) = pairs.iter().position(|(x, y)| !(x.is_finite() && y.is_finite())) {
            return Err(invalid(format!("pair {i} is not finite: {:?}", pairs[i])));
        }
        Ok(Self {
            pairs,
            seed: 0,
            model_label: label.into(),
            rho_true: None,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }
}

/// Draws `n` pairs `(R cos Θ, R cos(Θ - ψ))` with `Θ ~ U(-π, π)` and `R`
/// obtained by inverting the radial survival function.
pub fn sample_pairs(pair: &EllipticalPair, n: usize, seed: u64, exec: Execution) -> Result<SampleSet> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let psi = pair.psi();
    let model = pair.model();
    let chunks = n.div_ceil(CHUNK);
    let parts = map_indices(exec, chunks, |c| -> Result<Vec<(f64, f64)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let len = CHUNK.min(n - c * CHUNK);
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let theta = PI * (2.0 * rng.random::<f64>() - 1.0);
            // uniform on (0, 1]
            let u = 1.0 - rng.random::<f64>();
            let r = model.quantile(u)?;
            out.push((r * theta.cos(), r * (theta - psi).cos()));
        }
        Ok(out)
    });
    let mut pairs = Vec::with_capacity(n);
    for part in parts {
        pairs.extend(part?);
    }
    Ok(SampleSet {
        pairs,
        seed,
        model_label: model.label(),
        rho_true: Some(pair.rho()),
    })
}

/// Frequency of `{X > x, Y > y}` and its binomial standard error.
pub fn empirical_joint_survival(s: &SampleSet, x: f64, y: f64, exec: Execution) -> (f64, f64) {
    let hits = count_where(exec, &s.pairs, |&(a, b)| a > x && b > y);
    binomial(hits, s.len())
}

/// Frequency of `{X > x}` and its binomial standard error.
pub fn empirical_marginal_survival(s: &SampleSet, x: f64, exec: Execution) -> (f64, f64) {
    let hits = count_where(exec, &s.pairs, |&(a, _)| a > x);
    binomial(hits, s.len())
}

fn binomial(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// `Z_i = (ζX_i + Y_i)/√(ζ² + 2ζρ + 1)`, distributed as `X`.
pub fn z_transform(s: &SampleSet, zeta: f64, rho: f64) -> Result<Vec<f64>> {
    let norm = zeta * zeta + 2.0 * zeta * rho + 1.0;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(invalid(format!("ζ² + 2ζρ + 1 must be positive, got {norm} (ζ={zeta}, ρ={rho})")));
    }
    let scale = norm.sqrt();
    Ok(s.pairs.iter().map(|&(x, y)| (zeta * x + y) / scale).collect())
}

/// Kolmogorov–Smirnov distance between the empirical law of `data` and `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 1% critical value `√(-ln(0.005)/2) ≈ 1.628` of the
/// Kolmogorov distribution.
pub const KS_C_1PCT: f64 = 1.627_624_465_467_491;

/// 1% critical distance for a one-sample test of size `n`.
pub fn ks_critical_one_sample(n: usize) -> f64 {
    KS_C_1PCT / (n as f64).sqrt()
}

/// 1% critical distance for a two-sample test of sizes `n`, `m`.
pub fn ks_critical_two_sample(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_C_1PCT * ((n + m) / (n * m)).sqrt()
}

/// Pearson correlation of two equally long slices.
pub(crate) fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx > 0.0 && syy > 0.0 {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    } else {
        None
    }
}
