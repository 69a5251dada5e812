mod common;

use carelabel::inference::{infer, Backend};
use carelabel::mrf::{empirical_marginals, marginals_bruteforce};
use carelabel::profiling::{
    generate_profiling_suite, generate_profiling_suite_with, measure_task_with, run_scaling_experiment_with,
    select_meter, write_measurements_csv, MeasureConfig, MeterKind, ModelMeter, SuiteParams, TaskOutput,
};
use common::{max_abs_diff, serial};
use proptest::prelude::*;

fn quick() -> MeasureConfig {
    MeasureConfig {
        repeats: 3,
        min_batch_seconds: 0.0005,
    }
}

#[test]
fn suite_samples_follow_their_models() {
    let suite = generate_profiling_suite(7, 3, 4000, (-1.0, 1.0)).unwrap();
    for e in &suite.entries {
        let exact = marginals_bruteforce(&e.model).unwrap();
        let emp = empirical_marginals(&e.samples).unwrap();
        assert!(max_abs_diff(&emp.vertex, &exact.vertex) < 0.05, "side {}", e.side);
    }
}

#[test]
fn scaling_cells_are_deterministic_and_follow_closed_forms() {
    let _guard = serial();
    let suite = generate_profiling_suite(3, 5, 10, (-1.0, 1.0)).unwrap();
    let meter = ModelMeter::default();
    let lbp = run_scaling_experiment_with(&suite, &Backend::lbp(), &quick(), &meter).unwrap();
    let again = run_scaling_experiment_with(&suite, &Backend::lbp(), &quick(), &meter).unwrap();
    for (p, q) in lbp.points.iter().zip(&again.points) {
        let n = p.side as u64;
        // 2·n·(n−1) edges, each contributing 2·(2 + 2) cells
        assert_eq!(p.edge_count as u64, 2 * n * (n - 1));
        assert_eq!(p.measurement.analytic_table_cells, Some(8 * 2 * n * (n - 1)));
        assert_eq!(p.measurement.analytic_table_cells, q.measurement.analytic_table_cells);
    }
    let jt = run_scaling_experiment_with(&suite, &Backend::jt(), &quick(), &meter).unwrap();
    for (p, e) in jt.points.iter().zip(&suite.entries) {
        let report = infer(&e.model, &Backend::jt()).unwrap();
        assert_eq!(p.measurement.analytic_table_cells, Some(report.analytic_table_cells));
    }
    let mut csv = Vec::new();
    write_measurements_csv(&jt, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("side,repeat,runtime_s,peak_rss_mb,table_cells,energy_ws,meter\n"));
    assert_eq!(text.lines().count(), 1 + 3 * jt.points.len());
}

#[test]
fn rapl_without_counters_falls_back() {
    let _guard = serial();
    let meter = carelabel::profiling::RaplMeter::with_path("/nonexistent/energy_uj", 25.0).unwrap();
    let m = measure_task_with(|| Ok(TaskOutput::default()), &quick(), &meter).unwrap();
    assert_eq!(m.meter, MeterKind::Model);
    assert!(m.meter_warning.is_some());
    assert!((m.energy_ws - 25.0 * m.runtime_seconds).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn model_meter_energy_identity(watts in 1.0f64..200.0, side in 2usize..5) {
        let _guard = serial();
        let suite = generate_profiling_suite(11, side, 5, (-1.0, 1.0)).unwrap();
        let meter = select_meter(MeterKind::Model, watts).unwrap();
        let run = run_scaling_experiment_with(&suite, &Backend::lbp(), &quick(), meter.as_ref()).unwrap();
        for p in &run.points {
            let m = &p.measurement;
            prop_assert!(m.runtime_seconds > 0.0 && m.runtime_stddev >= 0.0 && m.peak_memory_mb >= 0.0);
            prop_assert!((m.energy_ws - watts * m.runtime_seconds).abs() < 1e-9);
            prop_assert!((m.energy_ws / m.runtime_seconds - watts).abs() < 1e-9);
            for s in &m.samples {
                prop_assert!((s.energy_ws - watts * s.runtime_s).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn suite_is_a_pure_function(seed in any::<u64>(), max_side in 2usize..5, lo in -2.0f64..0.0, hi in 0.0f64..2.0) {
        let params = SuiteParams::new(seed, max_side, 20, (lo, hi));
        let a = generate_profiling_suite_with(params).unwrap();
        let b = generate_profiling_suite_with(params).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.entries.windows(2).all(|w| w[0].side < w[1].side));
        for e in &a.entries {
            prop_assert_eq!(e.samples.graph(), e.model.graph());
            prop_assert_eq!(e.samples.len(), 20);
        }
    }
}
