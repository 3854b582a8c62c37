use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use dks_core::instance::AdversarySpec;
use dks_core::oracles::{AuditReport, LpMapReport};
use dks_core::sdp::SdpSolution;
use dks_core::{Params, Recovery, VertexSubset};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, XiSource};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    NonConverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub max_scaled_violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolutionSummary {
    pub fn of(solution: &SdpSolution) -> Self {
        let r = &solution.residuals;
        SolutionSummary {
            objective: solution.objective,
            dual_objective: r.dual_objective,
            primal_residual: r.primal,
            dual_residual: r.dual,
            gap: r.gap,
            max_scaled_violation: r.families.max_scaled(solution.k),
            iterations: solution.iterations,
            converged: solution.converged,
        }
    }
}

/// Exhaustive optimum on small instances against the relaxation value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteCheck {
    pub value: f64,
    pub set: VertexSubset,
    pub sdp_objective: f64,
    /// `value <= sdp_objective + tol (1 + |sdp_objective|)`.
    pub dominated: bool,
}

/// Wall-clock figures; the only fields excluded from run-to-run determinism.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub solve_seconds: f64,
    pub projection_seconds: f64,
    pub total_seconds: f64,
}

/// One row per (grid point, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub grid_index: usize,
    pub seed: u64,
    /// Parameters actually used, including the resolved `xi`.
    pub params: Params,
    pub adversary: AdversarySpec,
    pub xi_source: XiSource,
    pub tol: f64,
    pub max_iter: usize,
    pub status: RunStatus,
    pub error: Option<String>,
    pub edges: usize,
    pub adversary_deletions: usize,
    pub solution: Option<SolutionSummary>,
    pub recovery: Option<Recovery>,
    pub audit: Option<AuditReport>,
    pub lp_map: Option<LpMapReport>,
    pub brute_force: Option<BruteCheck>,
    pub timing: Timing,
}

impl ResultRecord {
    /// Row for a run that failed before producing a solution.
    pub fn failed(config: &ExperimentConfig, grid_index: usize, params: Params, seed: u64, error: String) -> Self {
        ResultRecord {
            grid_index,
            seed,
            params,
            adversary: config.adversary.clone(),
            xi_source: config.xi.clone(),
            tol: config.tol,
            max_iter: config.max_iter,
            status: RunStatus::Failed,
            error: Some(error),
            edges: 0,
            adversary_deletions: 0,
            solution: None,
            recovery: None,
            audit: None,
            lp_map: None,
            brute_force: None,
            timing: Timing::default(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serialises")
    }
}

/// Append-only JSON-lines file shared by concurrent workers.
pub struct RecordSink {
    file: Mutex<File>,
}

impl RecordSink {
    pub fn append_to(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordSink { file: Mutex::new(file) })
    }

    /// Writes one row and flushes it before returning.
    pub fn append(&self, record: &ResultRecord) -> Result<()> {
        let line = record.to_line();
        let mut file = self.file.lock().expect("sink lock");
        writeln!(file, "{line}")?;
        file.flush()?;
        Ok(())
    }
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PassRate {
    pub passed: usize,
    pub applicable: usize,
}

impl PassRate {
    pub fn add(&mut self, flag: Option<bool>) {
        if let Some(b) = flag {
            self.applicable += 1;
            self.passed += b as usize;
        }
    }

    pub fn rate(&self) -> Option<f64> {
        (self.applicable > 0).then(|| self.passed as f64 / self.applicable as f64)
    }
}

/// Pass rates per clause for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub grid_index: usize,
    pub params: Params,
    pub runs: usize,
    pub converged: usize,
    pub failed: usize,
    pub recovery: PassRate,
    pub rho_q: PassRate,
    pub size_t: PassRate,
    pub rho_t_cap_s: PassRate,
    pub q_cap_s: PassRate,
    pub audit: PassRate,
    pub audit_cross: PassRate,
    pub audit_outer: PassRate,
    pub audit_ss: PassRate,
    pub audit_edge_inner: PassRate,
    pub audit_vertex_norm: PassRate,
    pub brute_dominated: PassRate,
    /// Mean of `rho(Q) / (kd/2)` over converged runs.
    pub mean_density_ratio: Option<f64>,
}

/// Recomputes every aggregate from the rows alone.
pub fn aggregate(rows: &[ResultRecord]) -> Vec<Aggregate> {
    let mut indices: Vec<usize> = rows.iter().map(|r| r.grid_index).collect();
    indices.sort_unstable();
    indices.dedup();
    indices
        .into_iter()
        .map(|gi| {
            let group: Vec<&ResultRecord> = rows.iter().filter(|r| r.grid_index == gi).collect();
            let mut a = Aggregate {
                grid_index: gi,
                params: group[0].params.clone(),
                runs: group.len(),
                converged: 0,
                failed: 0,
                recovery: PassRate::default(),
                rho_q: PassRate::default(),
                size_t: PassRate::default(),
                rho_t_cap_s: PassRate::default(),
                q_cap_s: PassRate::default(),
                audit: PassRate::default(),
                audit_cross: PassRate::default(),
                audit_outer: PassRate::default(),
                audit_ss: PassRate::default(),
                audit_edge_inner: PassRate::default(),
                audit_vertex_norm: PassRate::default(),
                brute_dominated: PassRate::default(),
                mean_density_ratio: None,
            };
            let mut ratios = Vec::new();
            for r in &group {
                a.converged += (r.status == RunStatus::Ok) as usize;
                a.failed += (r.status == RunStatus::Failed) as usize;
                if let Some(rec) = &r.recovery {
                    a.recovery.add(rec.passed());
                    a.rho_q.add(rec.pass_rho_q);
                    a.size_t.add(rec.pass_size_t);
                    a.rho_t_cap_s.add(rec.pass_rho_t_cap_s);
                    a.q_cap_s.add(rec.pass_q_cap_s);
                    ratios.push(rec.rho_q / rec.target);
                }
                if let Some(au) = &r.audit {
                    a.audit.add(Some(au.passed()));
                    a.audit_cross.add(Some(au.pass_cross));
                    a.audit_outer.add(Some(au.pass_outer));
                    a.audit_ss.add(au.pass_ss);
                    a.audit_edge_inner.add(au.pass_edge_inner);
                    a.audit_vertex_norm.add(au.pass_vertex_norm);
                }
                if let Some(b) = &r.brute_force {
                    a.brute_dominated.add(Some(b.dominated));
                }
            }
            if !ratios.is_empty() {
                a.mean_density_ratio = Some(ratios.iter().sum::<f64>() / ratios.len() as f64);
            }
            a
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config: ExperimentConfig,
    pub rows: usize,
    pub failures: usize,
    pub aggregates: Vec<Aggregate>,
}
