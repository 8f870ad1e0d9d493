//! Cubic smoothing of the swarm-produced trajectory.
//!
//! A cubic lateral profile `k(l)` is fit through a few anchor waypoints of
//! the feasible trajectory, interpolating the first and last anchors exactly
//! and enforcing zero slope at the end so the vehicle is oriented forward at
//! the terminal point. Reference waypoints are then regenerated along the
//! curve with the speed profile carried over from the source trajectory.

use serde::{Deserialize, Serialize};

use crate::cost::{LaneContext, Reference, Waypoint};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kinematics::{Trajectory, VehicleGeometry};

/// Cubic lateral profile `k(l) = b3 l^3 + b2 l^2 + b1 l + b0` over a
/// longitudinal domain, extended by a constant past the domain end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCurve {
    /// Coefficients `[b0, b1, b2, b3]` (constant term first).
    pub coefficients: [f64; 4],
    /// Longitudinal domain `[l_start, l_end]` (m).
    pub domain: (f64, f64),
}

impl CubicCurve {
    /// Lateral value at `l`; constant beyond the domain end (the fitted
    /// terminal slope is zero, so the extension is smooth).
    pub fn eval(&self, l: f64) -> f64 {
        let l = l.min(self.domain.1);
        let [b0, b1, b2, b3] = self.coefficients;
        ((b3 * l + b2) * l + b1) * l + b0
    }

    /// Slope `dk/dl` at `l`; zero beyond the domain end.
    pub fn slope(&self, l: f64) -> f64 {
        if l > self.domain.1 {
            return 0.0;
        }
        let [_, b1, b2, b3] = self.coefficients;
        (3.0 * b3 * l + 2.0 * b2) * l + b1
    }
}

/// Select up to four anchor points from a feasible trajectory: both
/// endpoints, the interior point with the largest lateral offset rate, and
/// the midpoint of the longer remaining span.
///
/// Fails with [`Error::NonMonotoneX`] when the trajectory doubles back in x,
/// in which case the caller uses the raw trajectory for this round.
pub fn select_waypoints(traj: &Trajectory) -> Result<Vec<Point>> {
    let pts: Vec<Point> = traj.positions().map(|(x, y)| Point::new(x, y)).collect();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints {
            got: pts.len(),
            need: 4,
        });
    }
    if pts.windows(2).any(|w| w[1].x <= w[0].x) {
        return Err(Error::NonMonotoneX);
    }
    let n = pts.len() - 1;

    // Interior index with the largest |dy/dx| (central difference); ties go
    // to the index nearest n/3 so degenerate profiles still spread evenly.
    let preferred = (n as f64 / 3.0).round() as usize;
    let mut best = 1usize;
    let mut best_rate = f64::NEG_INFINITY;
    for i in 1..n {
        let rate = ((pts[i + 1].y - pts[i - 1].y) / (pts[i + 1].x - pts[i - 1].x)).abs();
        let better = rate > best_rate
            || (rate == best_rate
                && (i as i64 - preferred as i64).abs() < (best as i64 - preferred as i64).abs());
        if better {
            best = i;
            best_rate = rate;
        }
    }

    // Complement anchor at the midpoint of the longer remaining span.
    let mut complement = if best <= n - best {
        (best + n).div_ceil(2)
    } else {
        best / 2
    };
    complement = complement.clamp(1, n - 1);
    if complement == best {
        complement = if best < n - 1 { best + 1 } else { best - 1 };
    }

    let (lo, hi) = (best.min(complement), best.max(complement));
    Ok(vec![pts[0], pts[lo], pts[hi], pts[n]])
}

/// Fit the cubic through 3–4 anchors: the first and last anchors are
/// interpolated exactly and the terminal slope is zero (terminal heading 0);
/// interior anchors enter in least squares.
///
/// The constrained family is one-dimensional: a quadratic satisfying the
/// three hard constraints plus a multiple of the null cubic
/// `(l - l_first)(l - l_last)^2`, so the least-squares step is closed form.
pub fn fit_cubic(anchors: &[Point]) -> Result<CubicCurve> {
    if anchors.len() < 3 {
        return Err(Error::TooFewPoints {
            got: anchors.len(),
            need: 3,
        });
    }
    if anchors.windows(2).any(|w| w[1].x <= w[0].x) {
        return Err(Error::SingularFit);
    }
    let first = anchors[0];
    let last = anchors[anchors.len() - 1];
    let span = first.x - last.x;

    // Quadratic with q(first) = y_first, q(last) = y_last, q'(last) = 0.
    let c = (first.y - last.y) / (span * span);
    let q = [
        last.y + c * last.x * last.x,
        -2.0 * c * last.x,
        c,
        0.0,
    ];
    // Null direction n(l) = (l - x_f)(l - x_l)^2, zero at both endpoints
    // with zero slope at the end.
    let (xf, xl) = (first.x, last.x);
    let null = [
        -xf * xl * xl,
        xl * xl + 2.0 * xf * xl,
        -(2.0 * xl + xf),
        1.0,
    ];
    let eval = |coef: &[f64; 4], l: f64| ((coef[3] * l + coef[2]) * l + coef[1]) * l + coef[0];

    let mut num = 0.0;
    let mut den = 0.0;
    for a in &anchors[1..anchors.len() - 1] {
        let n_val = eval(&null, a.x);
        num += n_val * (a.y - eval(&q, a.x));
        den += n_val * n_val;
    }
    let t = if den > 0.0 { num / den } else { 0.0 };

    Ok(CubicCurve {
        coefficients: [
            q[0] + t * null[0],
            q[1] + t * null[1],
            q[2] + t * null[2],
            q[3] + t * null[3],
        ],
        domain: (first.x, last.x),
    })
}

/// Regenerate reference waypoints along a fitted curve.
///
/// Longitudinal positions advance by `v * dt * cos(heading)` per step
/// (arc-length-aware stepping), lateral positions come from the curve, the
/// speed profile is carried over from the source trajectory, and headings are
/// the curve's own slope angles.
pub fn regenerate_reference(
    curve: &CubicCurve,
    source: &Trajectory,
    n: usize,
    dt: f64,
    lane: LaneContext,
    geom: &VehicleGeometry,
) -> Result<Reference> {
    if source.states.is_empty() {
        return Err(Error::TooFewPoints { got: 0, need: 1 });
    }
    let speed_at = |i: usize| source.states[i.min(source.states.len() - 1)].v;

    let mut points = Vec::with_capacity(n);
    let mut headings = Vec::with_capacity(n);
    let mut x = source.states[0].x;
    for i in 1..=n {
        let theta_prev = curve.slope(x).atan();
        x += speed_at(i - 1) * dt * theta_prev.cos();
        let heading = curve.slope(x).atan();
        points.push(Waypoint::new(x, curve.eval(x), speed_at(i)));
        headings.push(heading);
    }
    Reference::with_headings(points, headings, lane, geom, dt)
}
