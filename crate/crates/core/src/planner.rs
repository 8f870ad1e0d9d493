//! Outer planning loop: initial plan, interaction-aware prediction, swarm
//! refinement, and cubic smoothing, iterated until a feasible merge
//! trajectory is found. Also provides the Monte-Carlo target-adjustment
//! baseline planner.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{CostBreakdown, CostWeights, LaneContext, Reference, Waypoint};
use crate::error::{Error, Result};
use crate::geometry::{LaneLayout, ObstacleField, SafetySpec};
use crate::kinematics::{ControlBounds, Trajectory, VehicleGeometry, VehicleState};
use crate::prediction::{ObservationMatrix, PredictionMatrix, Predictor};
use crate::pso::{self, IterationTrace, SwarmConfig, SwarmProblem, SwarmResult};
use crate::splitmix64;

/// Desired terminal pose of the ego vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

/// Outer-loop caps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanBudgets {
    /// Maximum refinement rounds.
    pub max_rounds: usize,
    /// Wall-clock cap for the whole plan call (ms); defaults to twice the
    /// swarm budget when unset.
    pub wall_ms: Option<f64>,
}

impl Default for PlanBudgets {
    fn default() -> Self {
        Self {
            max_rounds: 5,
            wall_ms: None,
        }
    }
}

/// Everything needed to plan one lane change.
#[derive(Debug, Clone)]
pub struct PlanRequest {
    pub current: VehicleState,
    pub target: TargetState,
    /// Past positions of the surrounding vehicles.
    pub observations: ObservationMatrix,
    pub layout: LaneLayout,
    pub target_lane: usize,
    pub ego_geom: VehicleGeometry,
    pub other_geoms: Vec<VehicleGeometry>,
    pub safety: SafetySpec,
    pub bounds: ControlBounds,
    /// Planning horizon N (steps).
    pub horizon: usize,
    pub dt: f64,
    /// Lateral tolerance for counting the merge as complete (m).
    pub merge_tolerance: f64,
    pub budgets: PlanBudgets,
}

/// Planner output: the final reference waypoints plus the verified
/// trajectory and its metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanResult {
    /// Final reference waypoints for the merge.
    pub reference: Vec<Waypoint>,
    /// The trajectory the feasibility verdict refers to. For the swarm
    /// planner this is the rollout of `steering`; for the Monte-Carlo
    /// baseline it is the geometric candidate itself.
    pub trajectory: Trajectory,
    /// Refined steering sequence (empty for the Monte-Carlo baseline).
    pub steering: Vec<f64>,
    pub feasible: bool,
    /// Refinement rounds used (Monte-Carlo: index of the accepted
    /// modification).
    pub rounds: usize,
    pub wall_ms: f64,
    /// Minimum clearance against the predicted traffic (m).
    pub min_clearance: f64,
    pub clearance_step: usize,
    pub steps_to_merge: usize,
    pub breakdown: Option<CostBreakdown>,
    /// Whether the returned reference came from the fitted cubic.
    pub smoothed: bool,
    /// Predictions the feasibility verdict was computed against.
    pub predictions: PredictionMatrix,
}

/// Per-iteration trace line tagged with its refinement round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: usize,
    pub iteration: usize,
    pub particle_costs: Vec<f64>,
    pub global_best: f64,
    pub best_breakdown: CostBreakdown,
}

/// Constant-speed reference whose lateral profile is a zero-slope cubic ramp
/// from the current lateral position to the target lane center, ignoring
/// other vehicles.
pub fn initial_plan(request: &PlanRequest) -> Result<Reference> {
    let v = request.current.v;
    let dt = request.dt;
    let x0 = request.current.x;
    let x_start = x0 + v * dt;
    if request.target.x <= x_start {
        return Err(Error::TargetBehindEgo);
    }
    let y0 = request.current.y;
    let y_target = request.target.y;
    let span = request.target.x - x_start;

    let profile = |x: f64| -> (f64, f64) {
        let s = ((x - x_start) / span).clamp(0.0, 1.0);
        let y = y0 + (y_target - y0) * (3.0 * s * s - 2.0 * s * s * s);
        let dy_dx = (y_target - y0) * 6.0 * s * (1.0 - s) / span;
        (y, dy_dx)
    };

    let mut points = Vec::with_capacity(request.horizon);
    let mut headings = Vec::with_capacity(request.horizon);
    for i in 1..=request.horizon {
        let x = x0 + i as f64 * v * dt;
        let (y, slope) = profile(x);
        points.push(Waypoint::new(x, y, v));
        headings.push(slope.atan());
    }
    Reference::with_headings(
        points,
        headings,
        LaneContext::new(&request.layout, request.target_lane),
        &request.ego_geom,
        dt,
    )
}

fn reference_from_trajectory(
    traj: &Trajectory,
    lane: LaneContext,
    geom: &VehicleGeometry,
    dt: f64,
) -> Result<Reference> {
    let points = traj.states[1..]
        .iter()
        .map(|s| Waypoint::new(s.x, s.y, s.v))
        .collect();
    let headings = traj.states[1..].iter().map(|s| s.psi).collect();
    Reference::with_headings(points, headings, lane, geom, dt)
}

/// Fit the cubic through the swarm trajectory and regenerate the reference;
/// `None` when the trajectory doubles back and smoothing is skipped.
fn smooth_result(
    result: &SwarmResult,
    request: &PlanRequest,
    lane: LaneContext,
) -> Option<Reference> {
    let anchors = crate::smoothing::select_waypoints(&result.trajectory).ok()?;
    let curve = crate::smoothing::fit_cubic(&anchors).ok()?;
    crate::smoothing::regenerate_reference(
        &curve,
        &result.trajectory,
        request.horizon,
        request.dt,
        lane,
        &request.ego_geom,
    )
    .ok()
}

fn reference_is_safe(
    reference: &Reference,
    predictions: &PredictionMatrix,
    request: &PlanRequest,
) -> bool {
    let traj = reference.to_trajectory(request.current, request.dt);
    ObstacleField::new(&predictions.tracks(), &request.other_geoms, request.horizon)
        .and_then(|field| field.min_clearance(&traj, &request.ego_geom))
        .is_ok_and(|(clearance, _)| clearance >= request.safety.epsilon)
}

struct RoundOutcome {
    result: SwarmResult,
    smoothed: Option<Reference>,
    plan_feasible: bool,
}

/// Iterative swarm planning: predict, refine with the swarm, smooth, and
/// repeat until the refined trajectory is feasible and the cost has
/// converged, within the round and wall-time caps. Returns the best round
/// seen, flagged infeasible when no round produced a safe, merge-completing
/// trajectory.
pub fn plan(
    request: &PlanRequest,
    predictor: &dyn Predictor,
    pso_config: &SwarmConfig,
    weights: &CostWeights,
    mut trace: Option<&mut Vec<TraceRecord>>,
) -> Result<PlanResult> {
    let start = Instant::now();
    let lane = LaneContext::new(&request.layout, request.target_lane);
    let y_c = lane.lane_center_y;
    let wall_cap = request
        .budgets
        .wall_ms
        .or(pso_config.time_budget_ms.map(|ms| 2.0 * ms));

    let mut reference = initial_plan(request)?;
    let mut best: Option<RoundOutcome> = None;
    let mut prev_total = f64::INFINITY;
    let mut rounds = 0;

    for round in 1..=request.budgets.max_rounds.max(1) {
        if round > 1
            && wall_cap.is_some_and(|cap| start.elapsed().as_secs_f64() * 1e3 >= cap)
        {
            break;
        }
        let plan_view = reference.to_trajectory(request.current, request.dt);
        let predictions = predictor.predict(&request.observations, &plan_view)?;

        let problem = SwarmProblem {
            reference: &reference,
            initial_state: request.current,
            ego_geom: request.ego_geom,
            other_geoms: &request.other_geoms,
            safety: request.safety,
            weights: *weights,
            bounds: request.bounds,
            dt: request.dt,
        };
        let round_config = SwarmConfig {
            seed: splitmix64(pso_config.seed ^ round as u64),
            ..pso_config.clone()
        };
        let mut round_trace = trace.as_ref().map(|_| Vec::<IterationTrace>::new());
        let result = pso::run(
            &problem,
            predictor,
            &request.observations,
            predictions,
            &round_config,
            round_trace.as_mut(),
        )?;
        rounds = round;
        if let (Some(sink), Some(lines)) = (trace.as_deref_mut(), round_trace) {
            sink.extend(lines.into_iter().map(|it| TraceRecord {
                round,
                iteration: it.iteration,
                particle_costs: it.particle_costs,
                global_best: it.global_best,
                best_breakdown: it.best_breakdown,
            }));
        }

        let terminal_y = result.trajectory.states.last().map_or(f64::NAN, |s| s.y);
        let aligned = (terminal_y - y_c).abs() <= request.merge_tolerance;
        let plan_feasible = result.feasible && aligned;
        let converged = round == 1
            || (prev_total - result.breakdown.total) < 0.01 * prev_total.abs();
        prev_total = result.breakdown.total;

        let smoothed = smooth_result(&result, request, lane);
        let next_reference = match &smoothed {
            Some(r) => r.clone(),
            None => reference_from_trajectory(&result.trajectory, lane, &request.ego_geom, request.dt)?,
        };

        let replaces_best = match &best {
            None => true,
            Some(b) => {
                (plan_feasible && !b.plan_feasible)
                    || (plan_feasible == b.plan_feasible
                        && result.breakdown.total < b.result.breakdown.total)
            }
        };
        if replaces_best {
            best = Some(RoundOutcome {
                result,
                smoothed,
                plan_feasible,
            });
        }
        if plan_feasible && converged {
            break;
        }
        reference = next_reference;
    }

    let outcome = best.expect("at least one planning round runs");
    let trajectory_ys: Vec<f64> = outcome.result.trajectory.states.iter().map(|s| s.y).collect();
    let steps = steps_to_merge(&trajectory_ys, y_c, request.merge_tolerance);

    // Ship the smoothed reference only if it is itself safe against the
    // predictions; otherwise fall back to the raw feasible trajectory.
    let (reference_points, smoothed_flag) = match &outcome.smoothed {
        Some(sm) if reference_is_safe(sm, &outcome.result.predictions, request) => {
            (sm.points.clone(), true)
        }
        _ => (
            outcome.result.trajectory.states[1..]
                .iter()
                .map(|s| Waypoint::new(s.x, s.y, s.v))
                .collect(),
            false,
        ),
    };

    Ok(PlanResult {
        reference: reference_points,
        steering: outcome.result.steering.clone(),
        feasible: outcome.plan_feasible,
        rounds,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        min_clearance: outcome.result.breakdown.min_clearance,
        clearance_step: outcome.result.breakdown.clearance_step,
        steps_to_merge: steps,
        breakdown: Some(outcome.result.breakdown),
        smoothed: smoothed_flag,
        predictions: outcome.result.predictions.clone(),
        trajectory: outcome.result.trajectory,
    })
}

/// Monte-Carlo baseline configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Maximum target modifications to try after the original target.
    pub max_modifications: usize,
    /// Half-width of the uniform longitudinal target adjustment (m).
    pub margin: f64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            max_modifications: 12,
            margin: 15.0,
            seed: 0,
        }
    }
}

/// Monte-Carlo sampling baseline: iteratively adjust the longitudinal target
/// position within the margin, regenerate the initial-plan-style trajectory,
/// and return the first candidate that satisfies the shared safety
/// specification and completes the merge.
pub fn mc_modify_plan(
    request: &PlanRequest,
    predictor: &dyn Predictor,
    config: &McConfig,
) -> Result<PlanResult> {
    let start = Instant::now();
    let lane = LaneContext::new(&request.layout, request.target_lane);
    let y_c = lane.lane_center_y;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut fallback: Option<(Reference, Trajectory, PredictionMatrix, f64, usize)> = None;
    let min_target_x = request.current.x + 2.0 * request.current.v * request.dt;

    for modification in 0..=config.max_modifications {
        let shift = if modification == 0 {
            0.0
        } else {
            rng.random_range(-config.margin..=config.margin)
        };
        let target_x = request.target.x + shift;
        if target_x <= min_target_x {
            // Sampled target is not ahead of the ego; counts as a failed
            // modification.
            continue;
        }
        let mut shifted = request.clone();
        shifted.target.x = target_x;
        let candidate = initial_plan(&shifted)?;
        let traj = candidate.to_trajectory(request.current, request.dt);
        let predictions = predictor.predict(&request.observations, &traj)?;
        let field =
            ObstacleField::new(&predictions.tracks(), &request.other_geoms, request.horizon)?;
        let (clearance, step) = field.min_clearance(&traj, &request.ego_geom)?;
        let terminal_y = traj.states.last().map_or(f64::NAN, |s| s.y);
        let aligned = (terminal_y - y_c).abs() <= request.merge_tolerance;

        if clearance >= request.safety.epsilon && aligned {
            let ys: Vec<f64> = traj.states.iter().map(|s| s.y).collect();
            return Ok(PlanResult {
                reference: candidate.points.clone(),
                trajectory: traj,
                steering: Vec::new(),
                feasible: true,
                rounds: modification,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                min_clearance: clearance,
                clearance_step: step,
                steps_to_merge: steps_to_merge(&ys, y_c, request.merge_tolerance),
                breakdown: None,
                smoothed: false,
                predictions,
            });
        }
        let better = fallback
            .as_ref()
            .is_none_or(|(_, _, _, best_clearance, _)| clearance > *best_clearance);
        if better {
            fallback = Some((candidate, traj, predictions, clearance, step));
        }
    }

    let (candidate, traj, predictions, clearance, step) = fallback.ok_or_else(|| {
        Error::Config("every Monte-Carlo target sample fell behind the ego vehicle".into())
    })?;
    let ys: Vec<f64> = traj.states.iter().map(|s| s.y).collect();
    Ok(PlanResult {
        reference: candidate.points.clone(),
        trajectory: traj,
        steering: Vec::new(),
        feasible: false,
        rounds: config.max_modifications,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        min_clearance: clearance,
        clearance_step: step,
        steps_to_merge: steps_to_merge(&ys, y_c, request.merge_tolerance),
        breakdown: None,
        smoothed: false,
        predictions,
    })
}

/// First index after which the lateral position stays within tolerance of
/// the lane center for the rest of the sequence; the step horizon
/// (`len - 1`) when it never does.
pub fn steps_to_merge(ys: &[f64], y_center: f64, tolerance: f64) -> usize {
    let horizon = ys.len().saturating_sub(1);
    let mut last_bad = None;
    for (i, &y) in ys.iter().enumerate() {
        if (y - y_center).abs() > tolerance {
            last_bad = Some(i);
        }
    }
    match last_bad {
        None => 0,
        Some(i) => (i + 1).min(horizon),
    }
}
