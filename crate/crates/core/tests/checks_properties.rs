mod common;

use carelabel::checks::{
    convergence_check, distribution_recovery_check, fit_complexity_class, kl_divergence, performance_bound_check,
    CheckConfig, CheckId, CheckResult, ComplexityClass, DatasetOutcome, Expectation, Resource,
};
use carelabel::inference::Backend;
use carelabel::mrf::{build_grid_mrf, gibbs_sample, GibbsConfig, WeightInit};
use common::{model, small_graph, synthetic};
use proptest::prelude::*;

#[test]
fn classifier_recovers_every_class() {
    for class in ComplexityClass::ALL {
        let hits = (0..50u64)
            .filter(|&seed| {
                let fit = fit_complexity_class(&synthetic(class, seed), &ComplexityClass::ALL, 0.8).unwrap();
                fit.best == class && fit.decisive
            })
            .count();
        assert!(hits >= 48, "{class}: {hits}/50");
    }
}

#[test]
fn noiseless_linear_with_offset() {
    let data: Vec<(u64, f64)> = (2..=10u64).map(|n| (n, 3.0 * n as f64 + 2.0)).collect();
    let fit = fit_complexity_class(&data, &ComplexityClass::ALL, 0.8).unwrap();
    assert_eq!(fit.best, ComplexityClass::Linear);
    let exp: Vec<(u64, f64)> = (2..=10u64).map(|n| (n, 5.0 * 2f64.powi(n as i32))).collect();
    assert_eq!(
        fit_complexity_class(&exp, &ComplexityClass::ALL, 0.8).unwrap().best,
        ComplexityClass::Exponential
    );
}

#[test]
fn performance_check_requires_expected_class() {
    let cfg = CheckConfig::default();
    let data = synthetic(ComplexityClass::Exponential, 3);
    let ok = performance_bound_check(
        &data,
        ComplexityClass::Exponential,
        Resource::Runtime,
        "grid_side",
        &cfg,
    )
    .unwrap();
    assert!(ok.passed);
    assert_eq!(ok.check_id, CheckId::RuntimeBound);
    let wrong = performance_bound_check(&data, ComplexityClass::Linear, Resource::Memory, "grid_side", &cfg).unwrap();
    assert!(!wrong.passed);
    assert_eq!(wrong.check_id, CheckId::MemoryBound);
    assert_eq!(wrong.threshold_or_expected, Expectation::Class(ComplexityClass::Linear));
}

#[test]
fn reliability_checks_on_small_grid() {
    let cfg = CheckConfig::default();
    let truth = build_grid_mrf(
        3,
        3,
        2,
        WeightInit::SeededUniform {
            lo: -0.5,
            hi: 0.5,
            seed: 4,
        },
    )
    .unwrap();
    let recovery = distribution_recovery_check(&truth, &Backend::jt(), &cfg).unwrap();
    assert!(recovery.passed && recovery.metric.unwrap() < 1e-9);
    let samples = gibbs_sample(&truth, &GibbsConfig::new(2000, 4)).unwrap();
    let conv = convergence_check(&Backend::jt(), truth.graph(), &samples, &cfg).unwrap();
    assert!(conv.passed, "{conv:?}");
    assert!(conv.metric.unwrap() < cfg.grad_norm_threshold);
}

fn outcome(passed: bool, metric: Option<f64>) -> DatasetOutcome {
    DatasetOutcome {
        dataset: "d".into(),
        passed,
        metric,
        detail: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregation_is_conjunction(bits in prop::collection::vec((any::<bool>(), 0.0f64..1.0), 0..8)) {
        let per: Vec<_> = bits.iter().map(|&(p, m)| outcome(p, Some(m))).collect();
        let r = CheckResult::from_datasets(CheckId::Convergence, Expectation::Threshold(0.5), per);
        prop_assert_eq!(r.passed, !bits.is_empty() && bits.iter().all(|b| b.0));
        let max = bits.iter().map(|b| b.1).fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        prop_assert_eq!(r.metric, max);
        let halves = vec![
            CheckResult::from_datasets(CheckId::Convergence, Expectation::Threshold(0.5), r.per_dataset[..bits.len() / 2].to_vec()),
            CheckResult::from_datasets(CheckId::Convergence, Expectation::Threshold(0.5), r.per_dataset[bits.len() / 2..].to_vec()),
        ];
        prop_assert_eq!(CheckResult::merge(halves).unwrap(), r);
    }

    #[test]
    fn missing_metric_propagates(bits in prop::collection::vec(any::<bool>(), 1..6)) {
        let mut per: Vec<_> = bits.iter().map(|&p| outcome(p, Some(0.1))).collect();
        per.push(outcome(true, None));
        let r = CheckResult::from_datasets(CheckId::DistributionRecovery, Expectation::Threshold(0.5), per);
        prop_assert_eq!(r.metric, None);
    }

    #[test]
    fn kl_self_is_zero(raw in prop::collection::vec(0.0f64..1.0, 2..10)) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 0.0);
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        prop_assert_eq!(kl_divergence(&p, &p), 0.0);
    }

    #[test]
    fn jt_recovers_every_feasible_model(g in small_graph(), seed in 0u64..10_000) {
        let truth = model(g, 2.0, seed);
        let r = distribution_recovery_check(&truth, &Backend::jt(), &CheckConfig::default()).unwrap();
        prop_assert!(r.passed);
        prop_assert!(r.metric.unwrap() < 1e-9);
    }

    #[test]
    fn best_class_is_scale_invariant(
        ys in prop::collection::vec(0.01f64..1e6, 9),
        k in prop_oneof![1e-6f64..1e-3, 1e-3f64..1e3, 1e3f64..1e6],
    ) {
        let data: Vec<(u64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as u64 + 2, y)).collect();
        let scaled: Vec<(u64, f64)> = data.iter().map(|&(n, y)| (n, k * y)).collect();
        let a = fit_complexity_class(&data, &ComplexityClass::ALL, 0.8).unwrap();
        let b = fit_complexity_class(&scaled, &ComplexityClass::ALL, 0.8).unwrap();
        prop_assert_eq!(a.best, b.best);
        for ((ca, sa), (cb, sb)) in a.scores.iter().zip(&b.scores) {
            prop_assert_eq!(ca, cb);
            prop_assert!((sa - sb).abs() <= 1e-9 * sa.abs().max(1.0), "{} vs {}", sa, sb);
        }
    }
}
