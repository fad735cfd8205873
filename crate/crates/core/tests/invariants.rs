use elliptail::asymptotics::{converge, Path, Regime};
use elliptail::exact::{joint_survival_exact, joint_survival_grid, marginal_survival_exact};
use elliptail::radial::{make_kotz, KotzParams};
use elliptail::simulation::{empirical_joint_survival, sample_pairs};
use elliptail::{EllipticalPair, Execution, ModelDescriptor, RadialModel};
use proptest::prelude::*;

fn kotz(delta: f64) -> RadialModel {
    make_kotz(KotzParams::new(1.0, 0.0, 1.0, delta)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_is_exchangeable(rho in 0.0..0.95f64, x in 0.0..6.0f64, y in 0.0..6.0f64, d in 0.5..3.0f64) {
        let p = EllipticalPair::new(rho, kotz(d)).unwrap();
        let a = joint_survival_exact(&p, x, y, 1e-10).unwrap().value;
        let b = joint_survival_exact(&p, y, x, 1e-10).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 + 1e-9 * a);
    }

    #[test]
    fn marginal_dominates_joint(rho in 0.0..0.95f64, x in 0.0..6.0f64, y in 0.0..6.0f64) {
        let p = EllipticalPair::gaussian(rho).unwrap();
        let j = joint_survival_exact(&p, x, y, 1e-10).unwrap().value;
        let mx = marginal_survival_exact(&p, x, 1e-10).unwrap().value;
        let my = marginal_survival_exact(&p, y, 1e-10).unwrap().value;
        prop_assert!(j <= mx.min(my) * (1.0 + 1e-9) + 1e-15);
        prop_assert!(j >= 0.0);
    }

    #[test]
    fn joint_decreases_in_each_threshold(rho in 0.0..0.9f64, x in 0.0..5.0f64, y in 0.0..5.0f64, dx in 0.01..1.0f64) {
        let p = EllipticalPair::gaussian(rho).unwrap();
        let a = joint_survival_exact(&p, x, y, 1e-10).unwrap().value;
        let b = joint_survival_exact(&p, x + dx, y, 1e-10).unwrap().value;
        prop_assert!(b <= a * (1.0 + 1e-9));
    }

    #[test]
    fn descriptor_json_round_trip(d in 0.3..4.0f64, c in 0.2..3.0f64, n in -2.0..2.0f64) {
        let m = make_kotz(KotzParams::new(1.5, n, c, d)).unwrap();
        let json = m.to_json();
        let back = RadialModel::from_json(&json).unwrap();
        prop_assert_eq!(&back, &m);
        let desc: ModelDescriptor = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(serde_json::to_string_pretty(&desc).unwrap(), json);
    }
}

#[test]
fn monte_carlo_matches_exact_for_kotz() {
    let p = EllipticalPair::new(0.3, kotz(1.0)).unwrap();
    let s = sample_pairs(&p, 400_000, 99, Execution::Parallel).unwrap();
    for (x, y) in [(0.5, 0.5), (1.0, 0.2), (1.5, 1.5)] {
        let exact = joint_survival_exact(&p, x, y, 1e-12).unwrap().value;
        let (freq, _) = empirical_joint_survival(&s, x, y, Execution::Parallel);
        let se = (exact * (1.0 - exact) / s.len() as f64).sqrt();
        assert!((freq - exact).abs() < 4.0 * se, "({x},{y}): {freq} vs {exact}");
    }
}

#[test]
fn sampling_is_reproducible_across_strategies() {
    let p = EllipticalPair::new(0.7, kotz(2.0)).unwrap();
    let a = sample_pairs(&p, 30_000, 5, Execution::Parallel).unwrap();
    let b = sample_pairs(&p, 30_000, 5, Execution::Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn grid_matches_pointwise() {
    let p = EllipticalPair::gaussian(0.4).unwrap();
    let pts: Vec<(f64, f64)> = (0..12).map(|i| (0.5 * i as f64, 0.3 * i as f64)).collect();
    let par = joint_survival_grid(&p, &pts, 1e-12, Execution::Parallel);
    let seq = joint_survival_grid(&p, &pts, 1e-12, Execution::Sequential);
    for ((a, b), &(x, y)) in par.iter().zip(&seq).zip(&pts) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        assert_eq!(a.value, b.value);
        assert_eq!(a.value, joint_survival_exact(&p, x, y, 1e-12).unwrap().value);
    }
}

#[test]
fn convergence_error_scales_like_inverse_h() {
    // x·w(x)·|ratio - 1| stays bounded along the diagonal
    let p = EllipticalPair::gaussian(0.0).unwrap();
    let rows = converge(&p, Regime::Thm1a, &[4.0, 6.0, 8.0, 12.0, 16.0], Path::default(), 1e-12, Execution::Parallel)
        .unwrap();
    let alpha = 2.0f64.sqrt();
    for r in &rows {
        let h = alpha * r.x * p.model().scaling_w(alpha * r.x);
        assert!(h * (r.ratio - 1.0).abs() <= 10.0, "x={} ratio={}", r.x, r.ratio);
    }
}
