//! Lane-change trajectory planning in dense traffic.
//!
//! A swarm of steering-angle-sequence particles is refined against a
//! seven-term cost over kinematic bicycle rollouts, with surrounding-vehicle
//! motion supplied by pluggable interaction-aware predictors and the
//! resulting trajectory smoothed by a constrained cubic. A batch harness
//! reproduces the randomized-trial benchmark protocol, and a Monte-Carlo
//! target-adjustment baseline shares the same safety machinery.

pub mod cost;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod planner;
pub mod prediction;
pub mod pso;
pub mod smoothing;

pub use cost::{CostBreakdown, CostWeights, HeadCostMode, LaneContext, Reference, Waypoint};
pub use error::{Error, Result};
pub use geometry::{
    estimate_headings, is_safe, min_clearance, pairwise_distance, Footprint, LaneLayout,
    ObstacleField, Point, SafetySpec,
};
pub use harness::{plan_once, run_batch, ExperimentReport, Method, Scenario, ScenarioConfig};
pub use kinematics::{
    rollout, step, ControlBounds, ControlInput, Trajectory, VehicleGeometry, VehicleState,
};
pub use planner::{
    initial_plan, mc_modify_plan, plan, steps_to_merge, McConfig, PlanBudgets, PlanRequest,
    PlanResult, TargetState, TraceRecord,
};
pub use prediction::{
    interactive_gap_response, ConstantVelocityPredictor, IdmMobilPredictor, IdmParams,
    MobilParams, ObservationMatrix, PredictionMatrix, Predictor,
};
pub use pso::{SwarmConfig, SwarmResult};

/// SplitMix64 mixing step, used to derive independent seeds from a master
/// seed deterministically.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
