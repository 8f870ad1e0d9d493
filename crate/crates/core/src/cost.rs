//! Seven-term fitness evaluated over a dynamically feasible trajectory:
//! reference tracking, heading tracking, collision penalty, acceleration and
//! jerk regulation, steering effort, and lane-center alignment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{estimate_headings, LaneLayout, ObstacleField, Point, SafetySpec};
use crate::kinematics::{Trajectory, VehicleGeometry, VehicleState};

/// How heading deviations enter the cost.
///
/// `Signed` sums raw differences (allowing sign cancellation); `Squared` sums
/// squared differences and is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[derive(Default)]
pub enum HeadCostMode {
    #[default]
    Squared,
    Signed,
}


/// Weights of the fitness terms, plus the penalty magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub w_ref: f64,
    pub w_head: f64,
    pub w_col: f64,
    pub w_a: f64,
    pub w_j: f64,
    pub w_s: f64,
    pub w_la: f64,
    /// Flat penalty added to the lane term when the trajectory exits the
    /// road or overshoots the target lane's far boundary.
    pub lane_violation_penalty: f64,
    /// Flat penalty multiplied by `w_col` when the safety buffer is violated.
    pub collision_penalty: f64,
    pub head_cost: HeadCostMode,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            w_ref: 1.0,
            w_head: 10.0,
            w_col: 1.0,
            w_a: 0.1,
            w_j: 0.05,
            w_s: 1.0,
            w_la: 500.0,
            lane_violation_penalty: 1e4,
            collision_penalty: 1e6,
            head_cost: HeadCostMode::Squared,
        }
    }
}

/// Per-term values of the fitness for one candidate trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub f_ref: f64,
    pub f_head: f64,
    pub f_col: f64,
    pub f_a: f64,
    pub f_j: f64,
    pub f_s: f64,
    pub f_la: f64,
    pub total: f64,
    /// Minimum clearance against the predicted traffic (m).
    pub min_clearance: f64,
    /// Trajectory index attaining the minimum clearance.
    pub clearance_step: usize,
    /// Whether the trajectory left the road or overshot the target lane.
    pub lane_violation: bool,
}

impl CostBreakdown {
    /// Sentinel for candidates that could not be evaluated.
    pub fn unusable() -> Self {
        Self {
            f_ref: f64::INFINITY,
            f_head: 0.0,
            f_col: 0.0,
            f_a: 0.0,
            f_j: 0.0,
            f_s: 0.0,
            f_la: 0.0,
            total: f64::INFINITY,
            min_clearance: f64::NEG_INFINITY,
            clearance_step: 0,
            lane_violation: true,
        }
    }

    pub fn is_collision_free(&self) -> bool {
        self.f_col == 0.0
    }
}

/// One reference waypoint: position and speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub v: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64, v: f64) -> Self {
        Self { x, y, v }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Lane bookkeeping carried by a reference: where the target lane center and
/// the penalized boundaries are.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneContext {
    /// y of the target lane center (m).
    pub lane_center_y: f64,
    /// (low, high) y bounds of the target lane (m).
    pub target_lane_bounds: (f64, f64),
    /// (low, high) y bounds of the road (m).
    pub road_bounds: (f64, f64),
}

impl LaneContext {
    pub fn new(layout: &LaneLayout, target_lane: usize) -> Self {
        Self {
            lane_center_y: layout.center(target_lane),
            target_lane_bounds: layout.lane_bounds(target_lane),
            road_bounds: layout.road_bounds(),
        }
    }
}

/// Reference waypoints plus the control sequences derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub points: Vec<Waypoint>,
    /// Reference headings (rad), one per waypoint.
    pub headings: Vec<f64>,
    /// Reference steering (rad), one per waypoint.
    pub steering: Vec<f64>,
    /// Reference acceleration (m/s^2), one per waypoint.
    pub accel: Vec<f64>,
    pub lane: LaneContext,
}

impl Reference {
    /// Build from bare waypoints; headings come from finite differences.
    pub fn from_waypoints(
        points: Vec<Waypoint>,
        lane: LaneContext,
        geom: &VehicleGeometry,
        dt: f64,
    ) -> Result<Self> {
        let (accel, headings, steering) = reference_controls_from_waypoints(&points, geom, dt)?;
        Ok(Self {
            points,
            headings,
            steering,
            accel,
            lane,
        })
    }

    /// Build from waypoints with analytically known headings (e.g. evaluated
    /// from a fitted curve); acceleration and steering are derived.
    pub fn with_headings(
        points: Vec<Waypoint>,
        headings: Vec<f64>,
        lane: LaneContext,
        geom: &VehicleGeometry,
        dt: f64,
    ) -> Result<Self> {
        if points.len() != headings.len() {
            return Err(Error::DimensionMismatch {
                context: "waypoints vs headings",
                expected: points.len(),
                got: headings.len(),
            });
        }
        if points.len() < 3 {
            return Err(Error::TooFewPoints {
                got: points.len(),
                need: 3,
            });
        }
        let (accel, steering) = derive_controls(&points, &headings, geom, dt);
        Ok(Self {
            points,
            headings,
            steering,
            accel,
            lane,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// View the reference as a trajectory starting at the ego's current
    /// state, suitable as a predictor's ego-plan input.
    pub fn to_trajectory(&self, current: VehicleState, dt: f64) -> Trajectory {
        let mut states = Vec::with_capacity(self.points.len() + 1);
        states.push(current);
        states.extend(
            self.points
                .iter()
                .zip(&self.headings)
                .map(|(p, &psi)| VehicleState {
                    x: p.x,
                    y: p.y,
                    psi,
                    v: p.v,
                    beta: 0.0,
                }),
        );
        Trajectory::new(states, dt)
    }
}

/// Reference acceleration, heading, and steering sequences from waypoints.
///
/// Headings are estimated by finite difference; acceleration by a forward
/// difference of the speeds; steering by inverting the kinematics (slip
/// angle from the heading increment, then the steering that produces it).
pub fn reference_controls_from_waypoints(
    points: &[Waypoint],
    geom: &VehicleGeometry,
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            got: points.len(),
            need: 3,
        });
    }
    let positions: Vec<Point> = points.iter().map(Waypoint::position).collect();
    let headings = estimate_headings(&positions)?;
    let (accel, steering) = derive_controls(points, &headings, geom, dt);
    Ok((accel, headings, steering))
}

fn derive_controls(
    points: &[Waypoint],
    headings: &[f64],
    geom: &VehicleGeometry,
    dt: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = points.len();
    let mut accel = Vec::with_capacity(n);
    let mut steering = Vec::with_capacity(n);
    for i in 0..n - 1 {
        accel.push((points[i + 1].v - points[i].v) / dt);
        // Wrap the heading increment into (-pi, pi].
        let raw = headings[i + 1] - headings[i];
        let dpsi = raw - (2.0 * std::f64::consts::PI) * ((raw + std::f64::consts::PI)
            / (2.0 * std::f64::consts::PI))
            .floor();
        let v = points[i].v;
        let beta = if v > 1e-9 {
            (dpsi * geom.l_r / v).clamp(-1.0, 1.0).asin()
        } else {
            0.0
        };
        steering.push(geom.steering_for_slip(beta));
    }
    accel.push(*accel.last().unwrap());
    steering.push(*steering.last().unwrap());
    (accel, steering)
}

/// Evaluate the fitness of one rolled-out trajectory against a reference and
/// the predicted traffic.
///
/// The trajectory must have `N + 1` states for a reference of length `N`;
/// states `1..=N` are scored against the reference waypoints.
pub fn evaluate(
    traj: &Trajectory,
    steering: &[f64],
    reference: &Reference,
    obstacles: &ObstacleField,
    safety: &SafetySpec,
    weights: &CostWeights,
    ego_geom: &VehicleGeometry,
) -> Result<CostBreakdown> {
    let n = reference.len();
    if traj.states.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            context: "trajectory states vs reference length",
            expected: n + 1,
            got: traj.states.len(),
        });
    }
    if steering.len() != n {
        return Err(Error::DimensionMismatch {
            context: "steering sequence vs reference length",
            expected: n,
            got: steering.len(),
        });
    }
    if traj.states.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    let dt = traj.dt;
    let states = &traj.states[1..];

    let mut f_ref = 0.0;
    for (s, p) in states.iter().zip(&reference.points) {
        f_ref += (s.x - p.x).powi(2) + (s.y - p.y).powi(2);
    }
    f_ref *= weights.w_ref;

    let mut f_head = 0.0;
    for (s, &psi_ref) in states.iter().zip(&reference.headings) {
        let d = s.psi - psi_ref;
        f_head += match weights.head_cost {
            HeadCostMode::Squared => d * d,
            HeadCostMode::Signed => d,
        };
    }
    f_head *= weights.w_head;

    // Second and third finite differences of the positions.
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    let mut f_a = 0.0;
    for w in states.windows(3) {
        let ax = (w[2].x - 2.0 * w[1].x + w[0].x) / dt2;
        let ay = (w[2].y - 2.0 * w[1].y + w[0].y) / dt2;
        f_a += ax * ax + ay * ay;
    }
    f_a *= weights.w_a;

    let mut f_j = 0.0;
    for w in states.windows(4) {
        let jx = (-w[3].x + 3.0 * w[2].x - 3.0 * w[1].x + w[0].x) / dt3;
        let jy = (-w[3].y + 3.0 * w[2].y - 3.0 * w[1].y + w[0].y) / dt3;
        f_j += jx * jx + jy * jy;
    }
    f_j *= weights.w_j;

    let f_s = weights.w_s * steering.iter().map(|d| d * d).sum::<f64>();

    let lane_violation = violates_lane_bounds(traj, &reference.lane);
    let mut f_la = weights.w_la * (states[n - 1].y - reference.lane.lane_center_y).abs();
    if lane_violation {
        f_la += weights.lane_violation_penalty;
    }

    let (min_clearance, clearance_step) = obstacles.min_clearance(traj, ego_geom)?;
    let f_col = if min_clearance < safety.epsilon {
        weights.w_col * weights.collision_penalty
    } else {
        0.0
    };

    // Terms are summed in this fixed order.
    let total = f_ref + f_head + f_col + f_a + f_j + f_s + f_la;
    Ok(CostBreakdown {
        f_ref,
        f_head,
        f_col,
        f_a,
        f_j,
        f_s,
        f_la,
        total,
        min_clearance,
        clearance_step,
        lane_violation,
    })
}

/// Road-exterior check over the whole trajectory, plus a far-boundary
/// overshoot check after the vehicle first enters the target lane. Crossing
/// the lane divider is the maneuver itself and is never penalized.
fn violates_lane_bounds(traj: &Trajectory, lane: &LaneContext) -> bool {
    let (road_lo, road_hi) = lane.road_bounds;
    let (target_lo, target_hi) = lane.target_lane_bounds;
    let source_above = traj.states[0].y > lane.lane_center_y;
    let mut committed = false;
    for s in &traj.states[1..] {
        if s.y < road_lo || s.y > road_hi {
            return true;
        }
        if !committed && s.y >= target_lo && s.y <= target_hi {
            committed = true;
        }
        if committed {
            let overshoot = if source_above {
                s.y < target_lo
            } else {
                s.y > target_hi
            };
            if overshoot {
                return true;
            }
        }
    }
    false
}
