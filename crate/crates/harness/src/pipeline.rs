use std::time::Instant;

use dks_core::instance::generate;
use dks_core::oracles::{audit_mass_split, brute_force_dks, check_lp_feasibility_map, BRUTE_FORCE_MAX_N};
use dks_core::rounding::recover;
use dks_core::sdp::{build_problem, solve, SdpSolution};
use dks_core::{DksError, Instance, Params};

use crate::calibration::CalibrationCache;
use crate::config::{ExperimentConfig, XiSource};
use crate::error::Result;
use crate::record::{BruteCheck, RecordSink, ResultRecord, RunStatus, SolutionSummary, Timing};

/// Fills in `xi` according to the configured source.
pub fn resolve_xi(source: &XiSource, params: &Params, cache: &CalibrationCache) -> Result<Params> {
    let mut out = params.clone();
    match *source {
        XiSource::Params => {}
        XiSource::Fixed { value } => out.xi = value,
        XiSource::Calibrate { trials, seed } => {
            out.xi = cache.get_or_compute(params.n, params.k, params.p(), trials, seed)?.xi;
        }
    }
    Ok(out)
}

/// Everything one run produced, for callers that need more than the row.
pub struct PipelineRun {
    pub record: ResultRecord,
    pub instance: Instance,
    pub solution: Option<SdpSolution>,
}

/// generate, adversary, solve, recover, audit, and (for small `n`) brute
/// force. Errors raised before a solution exists are returned; a solver that
/// stops short is recorded as `non_converged`.
pub fn execute(
    config: &ExperimentConfig,
    grid_index: usize,
    params: &Params,
    seed: u64,
    cache: &CalibrationCache,
) -> Result<PipelineRun> {
    let start = Instant::now();
    let params = resolve_xi(&config.xi, params, cache)?;
    let instance: Instance = generate(&params, &config.adversary, seed)?;
    let problem = build_problem(&instance.graph, params.k)?;
    let (solution, status) = match solve(&problem, config.tol, config.max_iter) {
        Ok(s) => (s, RunStatus::Ok),
        Err(DksError::NonConverged(s)) => (*s, RunStatus::NonConverged),
        Err(e) => return Err(e.into()),
    };
    let mut record = ResultRecord {
        grid_index,
        seed,
        params: params.clone(),
        adversary: config.adversary.clone(),
        xi_source: config.xi.clone(),
        tol: config.tol,
        max_iter: config.max_iter,
        status,
        error: None,
        edges: instance.graph.edge_count(),
        adversary_deletions: instance.adversary_log.len(),
        solution: Some(SolutionSummary::of(&solution)),
        recovery: None,
        audit: None,
        lp_map: None,
        brute_force: None,
        timing: Timing {
            solve_seconds: solution.stats.wall_seconds,
            projection_seconds: solution.stats.projection_seconds,
            total_seconds: 0.0,
        },
    };
    if status == RunStatus::Ok {
        record.recovery = Some(recover(&instance, &solution)?);
        record.audit = Some(audit_mass_split(&instance, &solution)?);
        record.lp_map = Some(check_lp_feasibility_map(&instance, &solution)?);
        if params.n <= BRUTE_FORCE_MAX_N {
            let (set, value) = brute_force_dks(&instance.graph, params.k)?;
            record.brute_force = Some(BruteCheck {
                value,
                set,
                sdp_objective: solution.objective,
                dominated: value <= solution.objective + solution.objective_tolerance(),
            });
        }
    } else {
        record.error = Some(format!(
            "solver stopped after {} iterations without reaching tolerance",
            solution.iterations
        ));
    }
    record.timing.total_seconds = start.elapsed().as_secs_f64();
    Ok(PipelineRun {
        record,
        instance,
        solution: Some(solution),
    })
}

/// One full run; the row is appended to `sink` (if any) before returning.
pub fn run_pipeline(
    config: &ExperimentConfig,
    grid_index: usize,
    params: &Params,
    seed: u64,
    cache: &CalibrationCache,
    sink: Option<&RecordSink>,
) -> Result<ResultRecord> {
    let record = execute(config, grid_index, params, seed, cache)?.record;
    if let Some(sink) = sink {
        sink.append(&record)?;
    }
    Ok(record)
}
