//! Batch experiment protocol: randomized trials with derived seeds, run in
//! parallel workers, aggregated into a report.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{self, McConfig, PlanResult};
use crate::pso::SwarmConfig;
use crate::splitmix64;

use super::scenario::{build_scenario, ScenarioConfig};

/// Planner under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pso,
    Mc,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pso" => Ok(Method::Pso),
            "mc" => Ok(Method::Mc),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected 'pso' or 'mc')"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Pso => "pso",
            Method::Mc => "mc",
        })
    }
}

/// One trial's outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub feasible: bool,
    /// Feasible and within the wall-clock success budget.
    pub success: bool,
    pub min_clearance: f64,
    pub steps_to_merge: usize,
    pub wall_ms: f64,
    pub rounds: usize,
    /// Failure diagnostic when the trial errored or panicked.
    pub error: Option<String>,
}

/// Aggregates over one batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregates {
    pub trials: usize,
    pub feasible: usize,
    pub successes: usize,
    pub success_rate_pct: f64,
    /// Mean minimum clearance over the feasible trials (m).
    pub mean_min_clearance: Option<f64>,
    /// Median steps to merge over the feasible trials.
    pub median_steps_to_merge: Option<f64>,
    pub mean_wall_ms: f64,
    pub median_wall_ms: f64,
}

/// Full batch report: per-trial records plus aggregates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub master_seed: u64,
    pub particle_count: usize,
    pub success_budget_ms: f64,
    pub records: Vec<TrialRecord>,
    pub aggregates: Aggregates,
}

/// Deterministic per-trial seed derivation.
pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    splitmix64(master_seed.wrapping_add((trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Plan one fully seeded scenario with one method. The scenario seed fixes
/// the sampled traffic, the swarm (or Monte-Carlo) random stream, and hence
/// the whole result.
pub fn plan_once(
    config: &ScenarioConfig,
    seed: u64,
    method: Method,
    particles: Option<usize>,
    trace: Option<&mut Vec<crate::planner::TraceRecord>>,
) -> Result<PlanResult> {
    let scenario = build_scenario(config, seed)?;
    let request = scenario.plan_request()?;
    let predictor = scenario.predictor()?;
    match method {
        Method::Pso => {
            let pso_config = SwarmConfig {
                seed: splitmix64(seed ^ 0x50_53_4f),
                particle_count: particles.unwrap_or(config.pso.particle_count),
                ..config.pso.clone()
            };
            planner::plan(
                &request,
                predictor.as_ref(),
                &pso_config,
                &config.weights,
                trace,
            )
        }
        Method::Mc => {
            let mc = McConfig {
                max_modifications: config.planner.mc_max_modifications,
                margin: config.planner.mc_margin,
                seed: splitmix64(seed ^ 0x4d_43),
            };
            planner::mc_modify_plan(&request, predictor.as_ref(), &mc)
        }
    }
}

/// Run one seeded trial of one method. Panics inside the planner are caught
/// and recorded as failed trials.
pub fn run_trial(
    config: &ScenarioConfig,
    method: Method,
    trial: usize,
    master_seed: u64,
    particles: Option<usize>,
) -> TrialRecord {
    let seed = trial_seed(master_seed, trial);
    let outcome = catch_unwind(AssertUnwindSafe(|| -> Result<PlanResult> {
        plan_once(config, seed, method, particles, None)
    }));

    match outcome {
        Ok(Ok(result)) => TrialRecord {
            trial,
            seed,
            method,
            feasible: result.feasible,
            success: result.feasible && result.wall_ms <= config.planner.success_budget_ms,
            min_clearance: result.min_clearance,
            steps_to_merge: result.steps_to_merge,
            wall_ms: result.wall_ms,
            rounds: result.rounds,
            error: None,
        },
        Ok(Err(err)) => failed_record(trial, seed, method, err.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "trial panicked".to_owned());
            failed_record(trial, seed, method, msg)
        }
    }
}

fn failed_record(trial: usize, seed: u64, method: Method, error: String) -> TrialRecord {
    TrialRecord {
        trial,
        seed,
        method,
        feasible: false,
        success: false,
        min_clearance: f64::NEG_INFINITY,
        steps_to_merge: 0,
        wall_ms: 0.0,
        rounds: 0,
        error: Some(error),
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

fn aggregate(records: &[TrialRecord]) -> Aggregates {
    let feasible: Vec<&TrialRecord> = records.iter().filter(|r| r.feasible).collect();
    let successes = records.iter().filter(|r| r.success).count();
    let mean_min_clearance = (!feasible.is_empty()).then(|| {
        feasible.iter().map(|r| r.min_clearance).sum::<f64>() / feasible.len() as f64
    });
    let mut steps: Vec<f64> = feasible.iter().map(|r| r.steps_to_merge as f64).collect();
    let mut walls: Vec<f64> = records.iter().map(|r| r.wall_ms).collect();
    let mean_wall_ms = walls.iter().sum::<f64>() / walls.len().max(1) as f64;
    Aggregates {
        trials: records.len(),
        feasible: feasible.len(),
        successes,
        success_rate_pct: 100.0 * successes as f64 / records.len().max(1) as f64,
        mean_min_clearance,
        median_steps_to_merge: median(&mut steps),
        mean_wall_ms,
        median_wall_ms: median(&mut walls).unwrap_or(0.0),
    }
}

/// Run a batch of seeded trials in parallel workers; the master seed fixes
/// every per-trial seed.
pub fn run_batch(
    config: &ScenarioConfig,
    method: Method,
    trials: usize,
    master_seed: u64,
    particles: Option<usize>,
) -> Result<ExperimentReport> {
    config
        .validate_for_batch()
        .map_err(|e| Error::Config(e.to_string()))?;
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(config, method, t, master_seed, particles))
        .collect();
    let aggregates = aggregate(&records);
    Ok(ExperimentReport {
        method,
        master_seed,
        particle_count: particles.unwrap_or(config.pso.particle_count),
        success_budget_ms: config.planner.success_budget_ms,
        records,
        aggregates,
    })
}

impl ScenarioConfig {
    fn validate_for_batch(&self) -> Result<()> {
        // Full validation happens in build_scenario; this catches config
        // errors before spawning workers.
        build_scenario(self, 0).map(|_| ())
    }
}

/// One report per particle count, with shared per-trial seeds for paired
/// comparison.
pub fn particle_sweep(
    config: &ScenarioConfig,
    counts: &[usize],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<ExperimentReport>> {
    counts
        .iter()
        .map(|&count| run_batch(config, Method::Pso, trials, master_seed, Some(count)))
        .collect()
}
