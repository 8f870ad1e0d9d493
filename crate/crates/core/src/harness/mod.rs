//! Scenario construction, the batch experiment protocol, and file export.

mod batch;
mod export;
mod scenario;

pub use batch::{
    particle_sweep, plan_once, run_batch, run_trial, trial_seed, Aggregates, ExperimentReport,
    Method, TrialRecord,
};
pub use export::{export_plan, export_report, predictions_csv, trace_jsonl, trajectory_csv};
pub use scenario::{
    build_scenario, EgoSection, PlannerSection, PredictorSection, RoadSection, Scenario,
    ScenarioConfig, ScenarioSection, TrafficSection, VehicleSection,
};
