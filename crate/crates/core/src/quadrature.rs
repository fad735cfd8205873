//! Globally adaptive Gauss–Kronrod (10/21) quadrature.
//!
//! Intervals live in a max-heap keyed by their error estimate; the worst one
//! is bisected until the summed estimate meets the tolerance or the
//! evaluation budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of a numerical integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    pub(crate) fn exact(value: f64) -> Self {
        Self {
            value,
            abs_error_estimate: 0.0,
            evaluations: 0,
        }
    }

    /// Multiplies value and error estimate by a nonnegative factor.
    pub(crate) fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            abs_error_estimate: self.abs_error_estimate * factor,
            evaluations: self.evaluations,
        }
    }

    pub(crate) fn add(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            abs_error_estimate: self.abs_error_estimate + other.abs_error_estimate,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_evals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-12,
            max_evals: 1_000_000,
        }
    }
}

impl Tolerance {
    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7, 9).
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = kronrod.abs();
    let mut fv = [0.0; 20];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let value = kronrod * half;
    let asc = asc * half.abs();
    let abs_sum = abs_sum * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Panel { a, b, value, error }
}

/// Integrates `f` over the finite interval `[a, b]`.
///
/// Fails with [`Error::Quadrature`] if the budget is exhausted or the
/// integrand produces a non-finite value.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    if a == b {
        return Ok(QuadratureResult::exact(0.0));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("integration bounds must be finite, got [{a}, {b}]")));
    }
    let first = kronrod21(&f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);
    loop {
        if !total.is_finite() {
            return Err(Error::Quadrature {
                evaluations,
                error: f64::NAN,
                target: tol.target(0.0),
            });
        }
        if total_err <= tol.target(total) {
            return Ok(QuadratureResult {
                value: total,
                abs_error_estimate: total_err,
                evaluations,
            });
        }
        if evaluations + 42 > tol.max_evals {
            return Err(Error::Quadrature {
                evaluations,
                error: total_err,
                target: tol.target(total),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // panel cannot shrink further; what remains is roundoff
            let remaining: f64 = heap.iter().map(|p| p.error).sum();
            return Ok(QuadratureResult {
                value: total,
                abs_error_estimate: remaining + worst.error,
                evaluations,
            });
        }
        let left = kronrod21(&f, worst.a, mid);
        let right = kronrod21(&f, mid, worst.b);
        evaluations += 42;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // rebuild the sum occasionally to shed accumulated cancellation
        if evaluations % (42 * 64) == 21 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
}

/// Integrates `f` over `[a, ∞)` through the map `s = a + scale·t/(1-t)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    tol: &Tolerance,
) -> Result<QuadratureResult> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("semi-infinite scale must be positive, got {scale}")));
    }
    integrate(
        |t: f64| {
            let one_minus = 1.0 - t;
            let s = a + scale * t / one_minus;
            let v = f(s);
            if v == 0.0 {
                0.0
            } else {
                v * scale / (one_minus * one_minus)
            }
        },
        0.0,
        1.0,
        tol,
    )
}
