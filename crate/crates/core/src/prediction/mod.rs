//! Pluggable prediction of surrounding-vehicle future positions.
//!
//! Predictors share one functional interface: a matrix of past positional
//! observations (plus the ego's currently planned trajectory, which carries
//! the interaction channel) maps to a matrix of predicted future positions.
//! Deterministic substitute models are provided; a learned model can be
//! dropped in behind the same trait.

mod idm;

pub use idm::{IdmMobilPredictor, IdmParams, MobilParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kinematics::Trajectory;

/// Default observation horizon (steps).
pub const DEFAULT_N_OBS: usize = 8;
/// Default prediction horizon (steps).
pub const DEFAULT_N_PRED: usize = 12;

/// Past positions of the surrounding vehicles.
///
/// Rows are observation steps in chronological order (most recent last);
/// columns are vehicles. Every vehicle is observed at every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMatrix {
    steps: Vec<Vec<Point>>,
}

impl ObservationMatrix {
    pub fn new(steps: Vec<Vec<Point>>) -> Result<Self> {
        let width = steps.first().map_or(0, Vec::len);
        if steps.iter().any(|row| row.len() != width) {
            return Err(Error::RaggedObservations);
        }
        Ok(Self { steps })
    }

    pub fn n_obs(&self) -> usize {
        self.steps.len()
    }

    pub fn n_veh(&self) -> usize {
        self.steps.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<Point>] {
        &self.steps
    }

    /// Most recent observed position of one vehicle.
    pub fn latest(&self, vehicle: usize) -> Point {
        self.steps[self.steps.len() - 1][vehicle]
    }

    /// Displacement of one vehicle over the last two observations.
    pub fn last_displacement(&self, vehicle: usize) -> Result<Point> {
        if self.n_obs() < 2 {
            return Err(Error::TooFewPoints {
                got: self.n_obs(),
                need: 2,
            });
        }
        let last = self.steps[self.steps.len() - 1][vehicle];
        let prev = self.steps[self.steps.len() - 2][vehicle];
        Ok(Point::new(last.x - prev.x, last.y - prev.y))
    }
}

/// Predicted positions of the surrounding vehicles.
///
/// Rows are future steps `1..=n_pred`; columns are vehicles, matching the
/// observation matrix ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    steps: Vec<Vec<Point>>,
}

impl PredictionMatrix {
    pub fn new(steps: Vec<Vec<Point>>) -> Result<Self> {
        let width = steps.first().map_or(0, Vec::len);
        if steps.iter().any(|row| row.len() != width) {
            return Err(Error::RaggedObservations);
        }
        Ok(Self { steps })
    }

    pub fn empty(n_pred: usize) -> Self {
        Self {
            steps: vec![Vec::new(); n_pred],
        }
    }

    pub fn n_pred(&self) -> usize {
        self.steps.len()
    }

    pub fn n_veh(&self) -> usize {
        self.steps.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<Point>] {
        &self.steps
    }

    /// Per-vehicle position sequences (one track per vehicle).
    pub fn tracks(&self) -> Vec<Vec<Point>> {
        let n_veh = self.n_veh();
        (0..n_veh)
            .map(|i| self.steps.iter().map(|row| row[i]).collect())
            .collect()
    }
}

/// A model translating past observations into anticipated positional
/// sequences, conditioned on the ego's currently planned trajectory.
pub trait Predictor: Send + Sync {
    fn predict(&self, obs: &ObservationMatrix, ego_plan: &Trajectory) -> Result<PredictionMatrix>;

    /// Output rows produced per call.
    fn n_pred(&self) -> usize;

    fn name(&self) -> &'static str;
}

/// Linear extrapolation of each vehicle from its last observed displacement.
/// Ignores the ego plan entirely.
#[derive(Debug, Clone)]
pub struct ConstantVelocityPredictor {
    pub n_pred: usize,
}

impl ConstantVelocityPredictor {
    pub fn new(n_pred: usize) -> Self {
        Self { n_pred }
    }
}

impl Default for ConstantVelocityPredictor {
    fn default() -> Self {
        Self::new(DEFAULT_N_PRED)
    }
}

impl Predictor for ConstantVelocityPredictor {
    fn predict(&self, obs: &ObservationMatrix, _ego_plan: &Trajectory) -> Result<PredictionMatrix> {
        if obs.n_obs() < 2 {
            return Err(Error::TooFewPoints {
                got: obs.n_obs(),
                need: 2,
            });
        }
        let n_veh = obs.n_veh();
        let displacements: Vec<Point> = (0..n_veh)
            .map(|i| obs.last_displacement(i))
            .collect::<Result<_>>()?;
        let mut steps = Vec::with_capacity(self.n_pred);
        for k in 1..=self.n_pred {
            let row = (0..n_veh)
                .map(|i| {
                    let base = obs.latest(i);
                    Point::new(
                        base.x + k as f64 * displacements[i].x,
                        base.y + k as f64 * displacements[i].y,
                    )
                })
                .collect();
            steps.push(row);
        }
        PredictionMatrix::new(steps)
    }

    fn n_pred(&self) -> usize {
        self.n_pred
    }

    fn name(&self) -> &'static str {
        "constant-velocity"
    }
}

/// Per-vehicle displacement deltas between a prediction made without the ego
/// plan and one made with it. Zero everywhere for non-interactive predictors.
pub fn interactive_gap_response(
    without_ego: &PredictionMatrix,
    with_ego: &PredictionMatrix,
) -> Result<Vec<Vec<Point>>> {
    if without_ego.n_pred() != with_ego.n_pred() || without_ego.n_veh() != with_ego.n_veh() {
        return Err(Error::DimensionMismatch {
            context: "prediction matrices",
            expected: without_ego.n_pred() * without_ego.n_veh().max(1),
            got: with_ego.n_pred() * with_ego.n_veh().max(1),
        });
    }
    Ok(without_ego
        .rows()
        .iter()
        .zip(with_ego.rows())
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(p, q)| Point::new(q.x - p.x, q.y - p.y))
                .collect()
        })
        .collect())
}
