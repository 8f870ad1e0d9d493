//! Collision geometry: three-circle vehicle footprints, the inter-vehicle
//! distance metric, safety specification, and heading estimation from
//! position sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{Trajectory, VehicleGeometry};

/// A 2-D point in road coordinates (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Three-circle approximation of a vehicle body.
///
/// The circles have radius equal to the half-width and sit at offsets
/// `{-D, 0, +D}` along the heading, with `D = half_length - half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub center: Point,
    pub heading: f64,
    /// Axial circle offset `D` (m).
    pub axial_offset: f64,
    /// Circle radius (m), the vehicle half-width.
    pub radius: f64,
}

impl Footprint {
    pub fn new(center: Point, heading: f64, geom: &VehicleGeometry) -> Self {
        Self {
            center,
            heading,
            axial_offset: geom.half_length - geom.half_width,
            radius: geom.half_width,
        }
    }

    /// Circle centers at offsets -D, 0, +D along the heading.
    pub fn circle_centers(&self) -> [Point; 3] {
        let (sin, cos) = self.heading.sin_cos();
        let offset = |p: f64| {
            Point::new(
                self.center.x + p * self.axial_offset * cos,
                self.center.y + p * self.axial_offset * sin,
            )
        };
        [offset(-1.0), offset(0.0), offset(1.0)]
    }
}

/// Minimum allowed clearance under the three-circle distance metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetySpec {
    /// Safety buffer epsilon (m).
    pub epsilon: f64,
}

impl SafetySpec {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon }
    }
}

/// `true` iff the clearance satisfies the safety buffer.
pub fn is_safe(clearance: f64, spec: &SafetySpec) -> bool {
    clearance >= spec.epsilon
}

/// Inter-vehicle distance metric between two footprints.
///
/// Minimum over the nine circle pairs of center distance minus the sum of
/// radii. Negative values indicate overlap.
pub fn pairwise_distance(ego: &Footprint, other: &Footprint) -> f64 {
    let ego_centers = ego.circle_centers();
    let other_centers = other.circle_centers();
    let mut min = f64::INFINITY;
    for e in &ego_centers {
        for o in &other_centers {
            let d = e.distance(o) - (ego.radius + other.radius);
            if d < min {
                min = d;
            }
        }
    }
    min
}

/// Headings of a position sequence by finite difference of adjacent points.
///
/// The last heading repeats the previous one; coincident adjacent points
/// reuse the prior heading (initial fallback 0, so a stationary vehicle keeps
/// heading 0).
pub fn estimate_headings(points: &[Point]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            got: points.len(),
            need: 2,
        });
    }
    let mut headings = Vec::with_capacity(points.len());
    let mut prev = 0.0;
    for pair in points.windows(2) {
        let dx = pair[1].x - pair[0].x;
        let dy = pair[1].y - pair[0].y;
        if dx.hypot(dy) > 1e-12 {
            prev = dy.atan2(dx);
        }
        headings.push(prev);
    }
    headings.push(prev);
    Ok(headings)
}

/// Road layout: parallel lanes along the x axis, indexed from the bottom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneLayout {
    /// Width of each lane (m).
    pub lane_width: f64,
    pub lane_count: usize,
    /// y coordinate of the bottom road edge (m).
    pub y_min: f64,
}

impl LaneLayout {
    pub fn center(&self, lane: usize) -> f64 {
        self.y_min + (lane as f64 + 0.5) * self.lane_width
    }

    /// (low, high) y bounds of one lane.
    pub fn lane_bounds(&self, lane: usize) -> (f64, f64) {
        (
            self.y_min + lane as f64 * self.lane_width,
            self.y_min + (lane + 1) as f64 * self.lane_width,
        )
    }

    /// (low, high) y bounds of the whole road.
    pub fn road_bounds(&self) -> (f64, f64) {
        (
            self.y_min,
            self.y_min + self.lane_count as f64 * self.lane_width,
        )
    }

    /// Lane containing a lateral coordinate, if on the road.
    pub fn lane_of(&self, y: f64) -> Option<usize> {
        let (lo, hi) = self.road_bounds();
        if y < lo || y > hi {
            return None;
        }
        let idx = ((y - lo) / self.lane_width) as usize;
        Some(idx.min(self.lane_count - 1))
    }
}

impl Default for LaneLayout {
    fn default() -> Self {
        Self {
            lane_width: 3.5,
            lane_count: 2,
            y_min: 0.0,
        }
    }
}

/// Precomputed per-step footprints of the surrounding vehicles over a
/// planning horizon.
///
/// Built once per prediction update and shared across many candidate-ego
/// evaluations. Predictions shorter than the horizon are padded by holding
/// the last predicted position; headings are estimated by finite difference
/// per the prediction track.
#[derive(Debug, Clone)]
pub struct ObstacleField {
    /// `steps[k][i]`: footprint of vehicle `i` at `k + 1` steps ahead.
    steps: Vec<Vec<Footprint>>,
}

impl ObstacleField {
    /// Build from per-vehicle predicted tracks (each a position sequence for
    /// steps `1..=track.len()`).
    pub fn new(
        tracks: &[Vec<Point>],
        geoms: &[VehicleGeometry],
        horizon: usize,
    ) -> Result<Self> {
        if tracks.len() != geoms.len() {
            return Err(Error::DimensionMismatch {
                context: "obstacle tracks vs geometries",
                expected: geoms.len(),
                got: tracks.len(),
            });
        }
        if tracks.is_empty() {
            return Ok(Self {
                steps: vec![Vec::new(); horizon],
            });
        }
        let mut per_vehicle: Vec<Vec<Footprint>> = Vec::with_capacity(tracks.len());
        for (track, geom) in tracks.iter().zip(geoms) {
            if track.is_empty() {
                return Err(Error::TooFewPoints { got: 0, need: 1 });
            }
            let mut padded: Vec<Point> = Vec::with_capacity(horizon);
            for k in 0..horizon {
                padded.push(track[k.min(track.len() - 1)]);
            }
            let headings = if padded.len() >= 2 {
                estimate_headings(&padded)?
            } else {
                vec![0.0]
            };
            per_vehicle.push(
                padded
                    .iter()
                    .zip(&headings)
                    .map(|(p, h)| Footprint::new(*p, *h, geom))
                    .collect(),
            );
        }
        let mut steps = Vec::with_capacity(horizon);
        for k in 0..horizon {
            steps.push(per_vehicle.iter().map(|v| v[k]).collect());
        }
        Ok(Self { steps })
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn vehicle_count(&self) -> usize {
        self.steps.first().map_or(0, Vec::len)
    }

    pub fn footprints_at(&self, step: usize) -> &[Footprint] {
        &self.steps[step]
    }

    /// Minimum clearance of an ego trajectory against all vehicles over all
    /// common future steps, and the trajectory index attaining it.
    ///
    /// Ego states `1..` are checked against prediction steps `1..`; ego
    /// headings come from the trajectory itself. With no surrounding
    /// vehicles the clearance is infinite.
    pub fn min_clearance(
        &self,
        ego: &Trajectory,
        ego_geom: &VehicleGeometry,
    ) -> Result<(f64, usize)> {
        if ego.states.len() < 2 {
            return Err(Error::TooFewPoints {
                got: ego.states.len(),
                need: 2,
            });
        }
        let horizon = (ego.states.len() - 1).min(self.steps.len());
        let mut min = f64::INFINITY;
        let mut arg = 0;
        for k in 0..horizon {
            let state = &ego.states[k + 1];
            let ego_fp = Footprint::new(Point::new(state.x, state.y), state.psi, ego_geom);
            for other in &self.steps[k] {
                let d = pairwise_distance(&ego_fp, other);
                if d < min {
                    min = d;
                    arg = k + 1;
                }
            }
        }
        Ok((min, arg))
    }
}

/// Minimum clearance between an ego trajectory and per-vehicle predicted
/// tracks over the common horizon. See [`ObstacleField::min_clearance`].
pub fn min_clearance(
    ego: &Trajectory,
    others: &[Vec<Point>],
    geoms: &[VehicleGeometry],
    ego_geom: &VehicleGeometry,
) -> Result<(f64, usize)> {
    if ego.states.len() < 2 {
        return Err(Error::TooFewPoints {
            got: ego.states.len(),
            need: 2,
        });
    }
    let field = ObstacleField::new(others, geoms, ego.states.len() - 1)?;
    field.min_clearance(ego, ego_geom)
}
