use std::path::PathBuf;

use rayon::prelude::*;

use crate::calibration::CalibrationCache;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::pipeline::run_pipeline;
use crate::record::{aggregate, RecordSink, ResultRecord, RunStatus, SweepSummary};

pub const RESULTS_FILE: &str = "results.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

pub struct SweepOutcome {
    pub rows: Vec<ResultRecord>,
    pub summary: SweepSummary,
    pub results_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Runs every (grid point, seed) pair in parallel. Rows are appended to
/// `results.jsonl` as they finish; the returned rows and `summary.json` are in
/// (grid index, seed) order. A failing run becomes a `failed` row.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir)?;
    let cache = CalibrationCache::open(dir)?;
    let results_path = dir.join(RESULTS_FILE);
    let sink = RecordSink::append_to(&results_path)?;
    let jobs: Vec<_> = config
        .grid_points()
        .into_iter()
        .enumerate()
        .flat_map(|(gi, p)| config.seeds.iter().map(move |&s| (gi, p.clone(), s)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|(gi, params, seed)| match run_pipeline(config, *gi, params, *seed, &cache, Some(&sink)) {
            Ok(row) => Ok(row),
            Err(e) => {
                let row = ResultRecord::failed(config, *gi, params.clone(), *seed, e.to_string());
                sink.append(&row)?;
                Ok(row)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.grid_index, r.seed));
    let summary = SweepSummary {
        config: config.clone(),
        rows: rows.len(),
        failures: rows.iter().filter(|r| r.status == RunStatus::Failed).count(),
        aggregates: aggregate(&rows),
    };
    let summary_path = dir.join(SUMMARY_FILE);
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    Ok(SweepOutcome {
        rows,
        summary,
        results_path,
        summary_path,
    })
}
