use heatkernel_core::envelope::{
    check_envelope, default_c_grid, fit_envelope, run_scan, EnvelopeSample,
};
use heatkernel_core::oracle::apply_generator;
use heatkernel_core::{BallWeight, Domain, IntervalWeight, KernelSource, MultiPoly, ScanConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    name: String,
    domain: Domain,
    input: MultiPoly,
    expected: MultiPoly,
}

#[derive(Deserialize)]
struct Fixture {
    schema: u32,
    cases: Vec<Case>,
}

#[test]
fn generator_matches_hand_fixtures() {
    let text = include_str!("fixtures/generator_cases.json");
    let fx: Fixture = serde_json::from_str(text).unwrap();
    assert_eq!(fx.schema, 1);
    for case in fx.cases {
        let got = apply_generator(&case.domain, &case.input);
        assert!(
            got.max_coeff_diff(&case.expected) < 1e-14,
            "{}: {got:?}",
            case.name
        );
    }
}

fn cloud(seed: u64, n: usize) -> Vec<EnvelopeSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            use rand::Rng;
            let u: f64 = rng.random_range(0.0..16.0);
            let log_g = -2.0 - u / 4.0 + rng.random_range(-0.5..0.5);
            EnvelopeSample {
                u,
                log_g,
                t: 0.1,
                x: vec![0.0],
                y: vec![0.0],
            }
        })
        .collect()
}

#[test]
fn fit_ignores_sample_order() {
    let grid = default_c_grid(61);
    let mut samples = cloud(3, 400);
    let a = fit_envelope(&samples, 0, &grid).unwrap();
    samples.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let b = fit_envelope(&samples, 0, &grid).unwrap();
    assert_eq!(a, b);
}

#[test]
fn scaling_the_volume_shifts_the_constants() {
    // 4V̂ in place of V̂ multiplies √(V̂(x)V̂(y)) by 4, so every log G moves by log 4.
    let grid = default_c_grid(61);
    let samples = cloud(5, 300);
    let shifted: Vec<EnvelopeSample> = samples
        .iter()
        .map(|s| EnvelopeSample {
            log_g: s.log_g + 4f64.ln(),
            ..s.clone()
        })
        .collect();
    let a = fit_envelope(&samples, 0, &grid).unwrap();
    let b = fit_envelope(&shifted, 0, &grid).unwrap();
    assert_eq!((a.c2, a.c4), (b.c2, b.c4));
    assert!((b.log_c1 - a.log_c1 - 4f64.ln()).abs() < 1e-12);
    assert!((b.log_c3 - a.log_c3 - 4f64.ln()).abs() < 1e-12);
    assert!((a.ratio() - b.ratio()).abs() < 1e-12 * a.ratio());
}

fn small_config(source: KernelSource) -> ScanConfig {
    ScanConfig {
        t_list: vec![0.05, 0.3, 1.0],
        pairs_per_t: 150,
        source,
        ..ScanConfig::default()
    }
}

#[test]
fn scan_is_deterministic_and_passes_on_the_heat_kernel() {
    let dom = Domain::Interval(IntervalWeight::new(1.5, -0.5).unwrap());
    let a = run_scan(&dom, &small_config(KernelSource::Heat)).unwrap();
    let b = run_scan(&dom, &small_config(KernelSource::Heat)).unwrap();
    assert_eq!(a, b);
    assert!(a.passed(), "{:?}", a.check);
    assert!(a.fit.c1 > 0.0 && a.fit.c3.is_finite());
}

#[test]
fn negative_control_is_caught() {
    let dom = Domain::Ball(BallWeight::new(0.0, 2).unwrap());
    let r = run_scan(&dom, &small_config(KernelSource::NegativeControl)).unwrap();
    assert!(r.check.violations > 0);
    assert!(!r.passed());
}

#[test]
fn empty_time_list_is_an_error() {
    let dom = Domain::Interval(IntervalWeight::lebesgue());
    let cfg = ScanConfig {
        t_list: vec![],
        ..ScanConfig::default()
    };
    assert!(run_scan(&dom, &cfg).is_err());
}

proptest! {
    #[test]
    fn fitted_sandwich_holds_on_training(seed in 0u64..1000, n in 1usize..200) {
        let samples = cloud(seed, n);
        let fit = fit_envelope(&samples, 0, &default_c_grid(31)).unwrap();
        prop_assert!(fit.max_upper_slack <= 1e-12 && fit.max_lower_slack <= 1e-12);
        let check = check_envelope(&fit, &samples);
        prop_assert_eq!(check.violations, 0);
    }
}

#[test]
fn weights_are_validated_when_loaded() {
    let ok: Domain = serde_json::from_str(r#"{"domain":"ball","mu":1.0,"d":2}"#).unwrap();
    assert_eq!(ok, Domain::Ball(BallWeight::new(1.0, 2).unwrap()));
    let back: Domain = serde_json::from_str(&serde_json::to_string(&ok).unwrap()).unwrap();
    assert_eq!(back, ok);
    assert!(serde_json::from_str::<Domain>(r#"{"domain":"ball","mu":-1.0,"d":2}"#).is_err());
    assert!(
        serde_json::from_str::<Domain>(r#"{"domain":"interval","alpha":-1.5,"beta":0.0}"#).is_err()
    );
    assert!(
        serde_json::from_str::<Domain>(r#"{"domain":"simplex","kappa":[0.5,0.5],"d":2}"#).is_err()
    );
}
