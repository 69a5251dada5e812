mod common;

use carelabel::inference::Backend;
use carelabel::mrf::{DiscreteMRF, GraphStructure};
use carelabel::training::{gradient_descent_fit, nll_gradient, FitConfig};
use common::{data, max_fd_relative_error, model, nll};
use proptest::prelude::*;

fn small_grid() -> impl Strategy<Value = GraphStructure> {
    prop_oneof![
        Just(GraphStructure::grid(2, 2, 2).unwrap()),
        Just(GraphStructure::grid(2, 3, 2).unwrap())
    ]
}

fn mix(a: &DiscreteMRF, b: &DiscreteMRF, t: f64) -> DiscreteMRF {
    let lerp = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        x.iter()
            .zip(y)
            .map(|(p, q)| p.iter().zip(q).map(|(u, v)| t * u + (1.0 - t) * v).collect())
            .collect()
    };
    a.with_weights(
        lerp(a.vertex_weights(), b.vertex_weights()),
        lerp(a.edge_weights(), b.edge_weights()),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn gradient_matches_finite_differences(g in small_grid(), seed in 0u64..10_000) {
        let samples = data(&g, seed);
        let mrf = model(g, 1.0, seed);
        let err = max_fd_relative_error(&mrf, &samples, 1e-5);
        prop_assert!(err < 1e-4, "relative error {}", err);
    }

    #[test]
    fn nll_is_convex(g in small_grid(), seed in 0u64..10_000) {
        let samples = data(&g, seed);
        let a = model(g.clone(), 2.0, seed);
        let b = model(g, 2.0, seed + 1);
        let (fa, fb) = (nll(&a, &samples), nll(&b, &samples));
        for t in [0.25, 0.5, 0.75] {
            let fm = nll(&mix(&a, &b, t), &samples);
            prop_assert!(fm <= t * fa + (1.0 - t) * fb + 1e-9, "t={} {} > {}", t, fm, t * fa + (1.0 - t) * fb);
        }
    }

    #[test]
    fn vertex_shift_leaves_nll_and_gradient(g in small_grid(), seed in 0u64..10_000, c in -3.0f64..3.0, pick in 0usize..6) {
        let samples = data(&g, seed);
        let mrf = model(g, 1.0, seed);
        let v = pick % mrf.graph().vertex_count();
        let shifted = mrf.with_vertex_offset(v, c).unwrap();
        prop_assert!((nll(&mrf, &samples) - nll(&shifted, &samples)).abs() < 1e-9);
        let ga = nll_gradient(&mrf, &samples, &Backend::jt()).unwrap();
        let gb = nll_gradient(&shifted, &samples, &Backend::jt()).unwrap();
        let diff = ga.entries().zip(gb.entries()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-9);
    }

    #[test]
    fn fit_trace_is_bounded_and_finite(g in small_grid(), seed in 0u64..10_000, budget in 1usize..40) {
        let samples = data(&g, seed);
        let init = DiscreteMRF::zeros(g);
        let cfg = FitConfig { step: 0.5, max_iterations: budget, grad_tolerance: 1e-2 };
        for backend in [Backend::jt(), Backend::lbp()] {
            let (fitted, trace) = gradient_descent_fit(&init, &samples, &cfg, &backend).unwrap();
            prop_assert!(!trace.records.is_empty() && trace.records.len() <= budget + 1);
            for r in &trace.records {
                prop_assert!(r.nll.is_finite() && r.grad_norm.is_finite() && r.step.is_finite());
            }
            prop_assert!(fitted.vertex_weights().iter().flatten().all(|w| w.is_finite()));
            let g = nll_gradient(&init, &samples, &backend).unwrap();
            prop_assert!(g.entries().all(f64::is_finite));
        }
    }
}

#[test]
fn descent_reduces_nll() {
    let g = GraphStructure::grid(3, 3, 2).unwrap();
    let samples = data(&g, 5);
    let init = DiscreteMRF::zeros(g);
    let (_, trace) = gradient_descent_fit(&init, &samples, &FitConfig::default(), &Backend::jt()).unwrap();
    let first = trace.records.first().unwrap().nll;
    let last = trace.records.last().unwrap().nll;
    assert!(last < first);
    assert!(trace.converged(1e-2));
    let mut csv = Vec::new();
    trace.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("iteration,nll,grad_norm,step\n"));
    assert_eq!(text.lines().count(), trace.records.len() + 1);
}
