use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dks_core::instance::{apply_adversary, generate, load_instance, save_instance, AdversarySpec};
use dks_core::oracles::{audit_mass_split, brute_force_dks, check_lp_feasibility_map};
use dks_core::rounding::recover_with;
use dks_core::sdp::{build_problem, read_solution, solve, write_solution, SdpSolution};
use dks_core::{DksError, Instance};
use dks_harness::calibration::CalibrationCache;
use dks_harness::certificates::certify_instance;
use dks_harness::pipeline::{resolve_xi, run_pipeline};
use dks_harness::record::RecordSink;
use dks_harness::sweep::{run_sweep, RESULTS_FILE};
use dks_harness::{ExperimentConfig, HarnessError, Result, RunStatus, XiSource};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "dks", version, about = "Planted densest-k-subgraph experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Solver tolerance; overrides the config.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Spectral constant: a positive number, or `auto` to calibrate.
    #[arg(long, global = true)]
    xi: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from the config's parameters.
    Generate {
        #[arg(long, default_value_t = 0)]
        grid_index: usize,
    },
    /// Solve the relaxation for an instance file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Threshold-and-prune recovery from a solution dump.
    Recover {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Use this eta instead of the formula value.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Mass-split audit and LP feasibility map for a solution.
    Audit {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Monte-Carlo estimate of the spectral constant.
    Calibrate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Exhaustive optimum against the relaxation value (small n only).
    BruteCheck {
        #[arg(long)]
        instance: PathBuf,
        /// Existing solution dump; solved on the fly when absent.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// One full pipeline run for a single seed.
    Run {
        #[arg(long, default_value_t = 0)]
        grid_index: usize,
    },
    /// Every grid point and seed of the config.
    Sweep,
}

const DEFAULT_TOL: f64 = 1e-5;
const DEFAULT_MAX_ITER: usize = 50_000;
const AUTO_TRIALS: usize = 50;

fn parse_xi(raw: &str, seed: u64) -> Result<XiSource> {
    if raw == "auto" {
        return Ok(XiSource::Calibrate {
            trials: AUTO_TRIALS,
            seed,
        });
    }
    match raw.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(XiSource::Fixed { value: v }),
        _ => Err(HarnessError::Config(format!("--xi expects a positive number or `auto`, got {raw:?}"))),
    }
}

fn print_json<V: Serialize>(value: &V) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_json<V: Serialize>(dir: Option<&Path>, name: &str, value: &V) -> Result<()> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), serde_json::to_string_pretty(value)?)?;
    }
    Ok(())
}

fn load_solution(path: &Path) -> Result<SdpSolution> {
    Ok(read_solution(BufReader::new(File::open(path)?))?)
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| HarnessError::Config("--config is required for this command".into()))?;
        let mut config = ExperimentConfig::load(path)?;
        if let Some(tol) = self.tol {
            config.tol = tol;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(raw) = &self.xi {
            config.xi = parse_xi(raw, self.seed.unwrap_or(0))?;
        }
        if let Some(seed) = self.seed {
            config.seeds = vec![seed];
        }
        config.validate()?;
        Ok(config)
    }

    fn tol(&self) -> Result<f64> {
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err(HarnessError::Config(format!("--tol must be positive, got {tol}")));
        }
        Ok(tol)
    }

    /// The instance with `--xi` applied to its parameters.
    fn instance(&self, path: &Path) -> Result<Instance> {
        let mut instance: Instance = load_instance(path)?;
        if let Some(raw) = &self.xi {
            let source = parse_xi(raw, self.seed.unwrap_or(0))?;
            instance.params = resolve_xi(&source, &instance.params, &CalibrationCache::in_memory())?;
        }
        Ok(instance)
    }
}

fn grid_point(config: &ExperimentConfig, index: usize) -> Result<dks_core::Params> {
    let points = config.grid_points();
    let count = points.len();
    points
        .into_iter()
        .nth(index)
        .ok_or_else(|| HarnessError::Config(format!("grid index {index} out of range ({count} points)")))
}

fn solve_instance(instance: &Instance, tol: f64, max_iter: usize) -> Result<(SdpSolution, bool)> {
    let problem = build_problem(&instance.graph, instance.k())?;
    match solve(&problem, tol, max_iter) {
        Ok(s) => Ok((s, true)),
        Err(DksError::NonConverged(s)) => Ok((*s, false)),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct BruteReport {
    n: usize,
    k: usize,
    brute_force_value: f64,
    brute_force_set: Vec<usize>,
    sdp_objective: f64,
    tol: f64,
    dominated: bool,
}

fn run(cli: Cli) -> Result<ExitCode> {
    let c = &cli.common;
    let out = c.out.as_deref();
    match cli.command {
        Command::Generate { grid_index } => {
            let config = c.config()?;
            let params = grid_point(&config, grid_index)?;
            let seed = config.seeds[0];
            let clean = generate(&params, &AdversarySpec::none(), seed)?;
            let certificates = certify_instance(&clean)?;
            let instance = apply_adversary(&clean, &config.adversary)?;
            let dir = out.unwrap_or(&config.output_dir);
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("instance-{seed}.json"));
            save_instance(&instance, &path)?;
            eprintln!("wrote {}", path.display());
            print_json(&certificates)?;
            if !certificates.passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Solve { instance, max_iter } => {
            let inst: Instance = load_instance(&instance)?;
            let (solution, converged) = solve_instance(&inst, c.tol()?, max_iter.unwrap_or(DEFAULT_MAX_ITER))?;
            let dir = out.unwrap_or(Path::new("."));
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("solution-{}.txt", inst.seed));
            let mut file = std::io::BufWriter::new(File::create(&path)?);
            write_solution(&solution, &mut file)?;
            eprintln!("wrote {}", path.display());
            print_json(&dks_harness::record::SolutionSummary::of(&solution))?;
            if !converged {
                eprintln!("error: solver did not reach tolerance in {} iterations", solution.iterations);
                return Ok(ExitCode::from(3));
            }
        }
        Command::Recover {
            instance,
            solution,
            eta,
        } => {
            let inst = c.instance(&instance)?;
            let recovery = recover_with(&inst, &load_solution(&solution)?, eta)?;
            write_json(out, "recovery.json", &recovery)?;
            print_json(&recovery)?;
        }
        Command::Audit { instance, solution } => {
            let inst = c.instance(&instance)?;
            let sol = load_solution(&solution)?;
            let report = serde_json::json!({
                "audit": audit_mass_split(&inst, &sol)?,
                "lp_map": check_lp_feasibility_map(&inst, &sol)?,
            });
            write_json(out, "audit.json", &report)?;
            print_json(&report)?;
        }
        Command::Calibrate { n, k, p, trials } => {
            let (n, k, p) = match (n, k, p) {
                (Some(n), Some(k), Some(p)) => (n, k, p),
                (None, None, None) => {
                    let params = c.config()?.params;
                    (params.n, params.k, params.p())
                }
                _ => return Err(HarnessError::Config("give all of --n, --k, --p or none (use --config)".into())),
            };
            let seed = c.seed.unwrap_or(0);
            let cache = match out {
                Some(dir) => CalibrationCache::open(dir)?,
                None => CalibrationCache::in_memory(),
            };
            print_json(&cache.get_or_compute(n, k, p, trials, seed)?)?;
        }
        Command::BruteCheck {
            instance,
            solution,
            max_iter,
        } => {
            let inst: Instance = load_instance(&instance)?;
            let tol = c.tol()?;
            let sol = match solution {
                Some(path) => load_solution(&path)?,
                None => {
                    let (s, converged) = solve_instance(&inst, tol, max_iter.unwrap_or(DEFAULT_MAX_ITER))?;
                    if !converged {
                        eprintln!("error: solver did not reach tolerance in {} iterations", s.iterations);
                        return Ok(ExitCode::from(3));
                    }
                    s
                }
            };
            let (set, value) = brute_force_dks(&inst.graph, inst.k())?;
            let report = BruteReport {
                n: inst.n(),
                k: inst.k(),
                brute_force_value: value,
                brute_force_set: set.members().to_vec(),
                sdp_objective: sol.objective,
                tol: sol.tol,
                dominated: value <= sol.objective + sol.objective_tolerance(),
            };
            write_json(out, "brute_check.json", &report)?;
            print_json(&report)?;
            if !report.dominated {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Run { grid_index } => {
            let config = c.config()?;
            let params = grid_point(&config, grid_index)?;
            std::fs::create_dir_all(&config.output_dir)?;
            let cache = CalibrationCache::open(&config.output_dir)?;
            let sink = RecordSink::append_to(config.output_dir.join(RESULTS_FILE))?;
            let row = run_pipeline(&config, grid_index, &params, config.seeds[0], &cache, Some(&sink))?;
            print_json(&row)?;
            if row.status == RunStatus::NonConverged {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Sweep => {
            let config = c.config()?;
            let outcome = run_sweep(&config)?;
            eprintln!(
                "{} rows, {} failed; wrote {} and {}",
                outcome.summary.rows,
                outcome.summary.failures,
                outcome.results_path.display(),
                outcome.summary_path.display()
            );
            print_json(&outcome.summary.aggregates)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
