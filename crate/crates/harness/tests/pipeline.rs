use dks_core::instance::AdversarySpec;
use dks_core::oracles::tau_pair;
use dks_core::rounding::guarantee_bounds;
use dks_core::Params;
use dks_harness::calibration::CalibrationCache;
use dks_harness::record::{read_records, RecordSink, SweepSummary, Timing};
use dks_harness::{aggregate, run_pipeline, run_sweep, ExperimentConfig, ResultRecord, RunStatus, XiSource};

fn small_config(params: Params, seeds: Vec<u64>, dir: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(params, seeds);
    c.tol = 1e-6;
    c.output_dir = dir.to_path_buf();
    c
}

fn without_timing(mut r: ResultRecord) -> ResultRecord {
    r.timing = Timing::default();
    r
}

#[test]
fn tiny_run_has_brute_force_check() {
    let dir = tempfile::tempdir().unwrap();
    let params = Params::gamma_reg(24, 6, 3.0, 0.3, 0.3);
    let config = small_config(params.clone(), vec![5], dir.path());
    let sink = RecordSink::append_to(dir.path().join("rows.jsonl")).unwrap();
    let cache = CalibrationCache::in_memory();
    let row = run_pipeline(&config, 0, &params, 5, &cache, Some(&sink)).unwrap();
    assert_eq!(row.status, RunStatus::Ok);
    let brute = row.brute_force.as_ref().expect("n = 24 gets a brute-force check");
    assert!(brute.dominated, "{brute:?}");
    assert!(brute.value <= brute.sdp_objective + config.tol * (1.0 + brute.sdp_objective));
    assert!(row.recovery.is_some() && row.audit.is_some() && row.lp_map.is_some());
    // persisted before returning
    let rows = read_records(dir.path().join("rows.jsonl")).unwrap();
    assert_eq!(rows, vec![row]);
}

#[test]
fn deleting_cross_edges_never_raises_the_objective() {
    let dir = tempfile::tempdir().unwrap();
    let params = Params::exp(120, 24, 8.0, 0.2, 5, 4.5);
    let cache = CalibrationCache::in_memory();
    let clean = small_config(params.clone(), vec![1], dir.path());
    let mut attacked = clean.clone();
    attacked.adversary = AdversarySpec::delete_all_cross();
    for seed in 1..=3 {
        let before = run_pipeline(&clean, 0, &params, seed, &cache, None).unwrap();
        let after = run_pipeline(&attacked, 0, &params, seed, &cache, None).unwrap();
        assert_eq!(before.status, RunStatus::Ok);
        assert_eq!(after.status, RunStatus::Ok);
        assert!(after.adversary_deletions > 0);
        let (b, a) = (before.solution.unwrap().objective, after.solution.unwrap().objective);
        // each objective is within tol (1 + |obj|) of its true optimum
        assert!(a <= b + 2.0 * clean.tol * (1.0 + b.abs()), "seed {seed}: {a} > {b}");
        // the target is the planted density either way
        assert_eq!(after.recovery.unwrap().target, params.planted_density());
    }
}

#[test]
fn repeated_runs_match_except_timing() {
    let dir = tempfile::tempdir().unwrap();
    let params = Params::gamma(80, 16, 6.0, 0.2, 0.1);
    let config = small_config(params.clone(), vec![9], dir.path());
    let cache = CalibrationCache::in_memory();
    let a = run_pipeline(&config, 0, &params, 9, &cache, None).unwrap();
    let b = run_pipeline(&config, 0, &params, 9, &cache, None).unwrap();
    assert_eq!(without_timing(a.clone()).to_line(), without_timing(b).to_line());

    // the row's echo is enough to reproduce it
    let mut echo = ExperimentConfig::new(a.params.clone(), vec![a.seed]);
    echo.adversary = a.adversary.clone();
    echo.tol = a.tol;
    echo.max_iter = a.max_iter;
    echo.xi = a.xi_source.clone();
    let c = run_pipeline(&echo, a.grid_index, &a.params, a.seed, &cache, None).unwrap();
    assert_eq!(without_timing(a), without_timing(c));
}

#[test]
fn single_point_sweep_equals_run_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let params = Params::gamma_reg(60, 12, 4.0, 0.2, 0.1);
    let config = small_config(params.clone(), vec![3], dir.path());
    let outcome = run_sweep(&config).unwrap();
    assert_eq!(outcome.rows.len(), 1);
    let direct = run_pipeline(&config, 0, &params, 3, &CalibrationCache::in_memory(), None).unwrap();
    assert_eq!(without_timing(outcome.rows[0].clone()), without_timing(direct));
}

#[test]
fn sweep_aggregates_are_recomputable_and_failures_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let params = Params::gamma(60, 12, 4.0, 0.2, 0.1);
    let mut config = small_config(params, vec![1, 2], dir.path());
    // k = 70 >= n is rejected by the generator for every seed
    config.grid.k = vec![12, 70];
    config.grid.delta = vec![0.1, 0.2];
    config.xi = XiSource::Calibrate { trials: 3, seed: 11 };
    let outcome = run_sweep(&config).unwrap();
    assert_eq!(outcome.rows.len(), 8);
    let keys: Vec<(usize, u64)> = outcome.rows.iter().map(|r| (r.grid_index, r.seed)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(outcome.summary.failures, 4);
    for r in &outcome.rows {
        assert_eq!(r.status == RunStatus::Failed, r.params.k == 70);
    }

    let from_disk = read_records(&outcome.results_path).unwrap();
    assert_eq!(from_disk.len(), 8);
    let mut from_disk_sorted = from_disk.clone();
    from_disk_sorted.sort_by_key(|r| (r.grid_index, r.seed));
    assert_eq!(aggregate(&from_disk_sorted), outcome.summary.aggregates);
    let summary: SweepSummary =
        serde_json::from_str(&std::fs::read_to_string(&outcome.summary_path).unwrap()).unwrap();
    assert_eq!(summary, outcome.summary);
    for a in &summary.aggregates {
        let rows: Vec<_> = from_disk.iter().filter(|r| r.grid_index == a.grid_index).collect();
        assert_eq!(a.runs, rows.len());
        let ok = rows.iter().filter(|r| r.status == RunStatus::Ok).count();
        assert_eq!(a.converged, ok);
        assert_eq!(a.audit.applicable, ok);
    }
    // calibration is cached once per (n, k, p) of the successful points
    let cache = CalibrationCache::open(dir.path()).unwrap();
    assert_eq!(cache.len(), 2);
}

#[test]
fn bound_is_monotone_along_a_delta_sweep() {
    let mut config = ExperimentConfig::new(Params::exp(2000, 400, 300.0, 0.001, 9, 6.0), vec![1]);
    config.grid.delta = (1..=20).map(|i| i as f64 * 0.0005).collect();
    let bounds: Vec<f64> = config
        .grid_points()
        .iter()
        .map(|p| guarantee_bounds(p).unwrap().bound)
        .collect();
    assert_eq!(bounds.len(), 20);
    assert!(bounds.windows(2).all(|w| w[0] <= w[1]), "{bounds:?}");

    let mut config = ExperimentConfig::new(Params::gamma_reg(1000, 125, 100.0, 0.001, 0.005), vec![1]);
    config.grid.delta = (1..=10).map(|i| i as f64 * 0.001).collect();
    let bounds: Vec<f64> = config
        .grid_points()
        .iter()
        .map(|p| guarantee_bounds(p).unwrap().bound)
        .collect();
    assert!(bounds.windows(2).all(|w| w[0] <= w[1]), "{bounds:?}");
}

#[test]
fn tau_dominates_tau_prime_over_a_gamma_grid() {
    let mut config = ExperimentConfig::new(Params::gamma(1000, 125, 100.0, 0.001, 0.001), vec![1]);
    config.grid.delta = (0..8).map(|i| 0.001 + i as f64 * 0.0005).collect();
    config.grid.gamma = (0..8).map(|i| 0.001 + i as f64 * 0.0007).collect();
    let mut checked = 0;
    for p in config.grid_points() {
        if let Some((tau, tau_prime)) = tau_pair(&p).unwrap() {
            assert!(tau >= tau_prime, "delta {} gamma {}: {tau} < {tau_prime}", p.delta, p.gamma);
            checked += 1;
        }
    }
    assert!(checked >= 32, "only {checked} valid points");
}
