//! Command-line front end: single plans, randomized batches, particle-count
//! sweeps, and file export.
//!
//! Exit codes: 0 on success, 1 when a single plan is infeasible, 2 on
//! configuration or runtime errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lanechange_core::harness::{
    self, export_plan, export_report, particle_sweep, plan_once, run_batch, Method,
    ScenarioConfig,
};
use lanechange_core::planner::TraceRecord;

/// Environment variable naming the default directory for scenario configs.
const CONFIG_DIR_ENV: &str = "LANECHANGE_CONFIG_DIR";

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: lanechange_core::Error| e.to_string())
}

#[derive(Parser)]
#[command(
    name = "lanechange",
    about = "Swarm-based lane-change trajectory planning in dense traffic",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario config file; bare names resolve against $LANECHANGE_CONFIG_DIR.
    #[arg(long, default_value = "nominal.toml")]
    config: PathBuf,
    /// Scenario seed (plan/export) or master seed (batch/sweep).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the swarm particle count.
    #[arg(long)]
    particles: Option<usize>,
    /// Override the predictor kind (idm | constant-velocity).
    #[arg(long)]
    predictor: Option<String>,
    /// Override the swarm time budget and the success budget (ms).
    #[arg(long)]
    budget_ms: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one lane change and print a summary.
    Plan {
        #[command(flatten)]
        common: CommonArgs,
        /// Planner to run (pso | mc).
        #[arg(long, default_value = "pso", value_parser = parse_method)]
        method: Method,
        /// Collect the per-iteration cost trace.
        #[arg(long)]
        trace: bool,
        /// Also write trajectory/prediction/trace/result files here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a batch of randomized trials and report aggregate metrics.
    Batch {
        #[command(flatten)]
        common: CommonArgs,
        /// Planner to run (pso | mc).
        #[arg(long, default_value = "pso", value_parser = parse_method)]
        method: Method,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Write report.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one batch per particle count with shared seeds.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Particle counts to compare.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4, 5])]
        counts: Vec<usize>,
        /// Write one report file per count here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan once and write the full file set (trajectory.csv,
    /// predictions.csv, trace.jsonl, result.json).
    Export {
        #[command(flatten)]
        common: CommonArgs,
        /// Planner to run (pso | mc).
        #[arg(long, default_value = "pso", value_parser = parse_method)]
        method: Method,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve_config_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() || path.components().count() > 1 {
        return path.to_path_buf();
    }
    match std::env::var_os(CONFIG_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(path),
        None => path.to_path_buf(),
    }
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig, lanechange_core::Error> {
    let path = resolve_config_path(&common.config);
    let mut config = ScenarioConfig::from_path(&path)?;
    if let Some(particles) = common.particles {
        config.pso.particle_count = particles;
    }
    if let Some(kind) = &common.predictor {
        config.predictor.kind = kind.clone();
    }
    if let Some(budget) = common.budget_ms {
        config.pso.time_budget_ms = Some(budget);
        config.planner.success_budget_ms = budget;
    }
    Ok(config)
}

fn print_report(report: &harness::ExperimentReport) {
    let a = &report.aggregates;
    println!(
        "{} ({} particles, master seed {}): {} trials",
        report.method, report.particle_count, report.master_seed, a.trials
    );
    println!(
        "  success rate    : {:.1}% ({} of {}, budget {} ms)",
        a.success_rate_pct, a.successes, a.trials, report.success_budget_ms
    );
    println!("  feasible        : {}", a.feasible);
    match a.mean_min_clearance {
        Some(c) => println!("  mean clearance  : {c:.3} m (feasible trials)"),
        None => println!("  mean clearance  : n/a (no feasible trials)"),
    }
    match a.median_steps_to_merge {
        Some(s) => println!("  median steps    : {s:.0}"),
        None => println!("  median steps    : n/a"),
    }
    println!(
        "  wall time       : mean {:.2} ms, median {:.2} ms",
        a.mean_wall_ms, a.median_wall_ms
    );
}

fn run() -> Result<u8, lanechange_core::Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Plan {
            common,
            method,
            trace,
            out,
        } => {
            let config = load_config(&common)?;
            let seed = common.seed.unwrap_or(config.scenario.seed);
            let mut trace_sink: Vec<TraceRecord> = Vec::new();
            let result = plan_once(
                &config,
                seed,
                method,
                None,
                trace.then_some(&mut trace_sink),
            )?;
            println!(
                "scenario seed {} ({} vehicles), method {}, predictor {}",
                seed,
                config.traffic.count(),
                method,
                config.predictor.kind
            );
            println!(
                "feasible        : {} ({} rounds, {:.2} ms)",
                result.feasible, result.rounds, result.wall_ms
            );
            println!(
                "min clearance   : {:.3} m at step {}",
                result.min_clearance, result.clearance_step
            );
            println!("steps to merge  : {}", result.steps_to_merge);
            if let Some(b) = &result.breakdown {
                println!(
                    "cost            : total {:.3} (ref {:.3}, head {:.3}, col {:.0}, a {:.3}, j {:.3}, s {:.5}, la {:.3})",
                    b.total, b.f_ref, b.f_head, b.f_col, b.f_a, b.f_j, b.f_s, b.f_la
                );
            }
            if let Some(dir) = out {
                let files = export_plan(&result, &trace_sink, &dir)?;
                for f in files {
                    println!("wrote {}", f.display());
                }
            }
            Ok(if result.feasible { 0 } else { 1 })
        }
        Command::Batch {
            common,
            method,
            trials,
            out,
        } => {
            let config = load_config(&common)?;
            let master = common.seed.unwrap_or(config.scenario.seed);
            let report = run_batch(&config, method, trials, master, common.particles)?;
            print_report(&report);
            if let Some(dir) = out {
                let path = export_report(&report, &dir)?;
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Sweep {
            common,
            trials,
            counts,
            out,
        } => {
            let config = load_config(&common)?;
            let master = common.seed.unwrap_or(config.scenario.seed);
            let reports = particle_sweep(&config, &counts, trials, master)?;
            for report in &reports {
                print_report(report);
            }
            if let Some(dir) = out {
                for report in &reports {
                    let sub = dir.join(format!("particles_{}", report.particle_count));
                    let path = export_report(report, &sub)?;
                    println!("wrote {}", path.display());
                }
            }
            Ok(0)
        }
        Command::Export {
            common,
            method,
            out,
        } => {
            let config = load_config(&common)?;
            let seed = common.seed.unwrap_or(config.scenario.seed);
            let mut trace_sink: Vec<TraceRecord> = Vec::new();
            let result = plan_once(&config, seed, method, None, Some(&mut trace_sink))?;
            let files = export_plan(&result, &trace_sink, &out)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
