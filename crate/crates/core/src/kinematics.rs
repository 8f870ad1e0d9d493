//! Discrete-time kinematic bicycle model.
//!
//! Propagates steering/acceleration sequences into dynamically feasible
//! state trajectories. The update is, per step of length `dt`:
//!
//! ```text
//! beta = atan(l_r / (l_f + l_r) * tan(delta))
//! x'   = dt * v * cos(psi + beta) + x
//! y'   = dt * v * sin(psi + beta) + y
//! psi' = v / l_r * sin(beta) + psi
//! v'   = dt * a + v
//! ```
//!
//! `beta` is computed first from the steering applied during the step and is
//! the slip angle used in the position and heading updates of that step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pose, speed, and slip angle of one vehicle at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Longitudinal position of the vehicle center (m).
    pub x: f64,
    /// Lateral position of the vehicle center (m).
    pub y: f64,
    /// Inertial heading (rad).
    pub psi: f64,
    /// Speed (m/s), never negative.
    pub v: f64,
    /// Slip angle of the center velocity vs the longitudinal axis (rad).
    pub beta: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, psi: f64, v: f64) -> Self {
        Self {
            x,
            y,
            psi,
            v,
            beta: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.psi.is_finite()
            && self.v.is_finite()
            && self.beta.is_finite()
    }
}

/// Axle layout and footprint half-dimensions of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleGeometry {
    /// Center-to-front-axle distance (m).
    pub l_f: f64,
    /// Center-to-rear-axle distance (m).
    pub l_r: f64,
    /// Half-length of the body (m).
    pub half_length: f64,
    /// Half-width of the body (m).
    pub half_width: f64,
}

impl VehicleGeometry {
    /// A 5 m x 2 m passenger car with the axles split evenly about the center.
    pub fn passenger_car() -> Self {
        Self {
            l_f: 1.25,
            l_r: 1.25,
            half_length: 2.5,
            half_width: 1.0,
        }
    }

    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }

    /// Slip angle for a given steering angle.
    pub fn slip_angle(&self, delta: f64) -> f64 {
        (self.l_r / self.wheelbase() * delta.tan()).atan()
    }

    /// Steering angle that produces a given slip angle (inverse of `slip_angle`).
    pub fn steering_for_slip(&self, beta: f64) -> f64 {
        (self.wheelbase() / self.l_r * beta.tan()).atan()
    }
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        Self::passenger_car()
    }
}

/// One step of control: steering angle and acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Steering angle (rad).
    pub delta: f64,
    /// Acceleration of the vehicle center (m/s^2).
    pub a: f64,
}

impl ControlInput {
    pub fn new(delta: f64, a: f64) -> Self {
        Self { delta, a }
    }

    pub fn coast() -> Self {
        Self { delta: 0.0, a: 0.0 }
    }
}

/// Saturation limits for control inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlBounds {
    /// Maximum |steering angle| (rad).
    pub delta_max: f64,
    /// Maximum |acceleration| (m/s^2).
    pub a_max: f64,
}

impl ControlBounds {
    pub fn clamp(&self, input: ControlInput) -> ControlInput {
        ControlInput {
            delta: input.delta.clamp(-self.delta_max, self.delta_max),
            a: input.a.clamp(-self.a_max, self.a_max),
        }
    }
}

impl Default for ControlBounds {
    fn default() -> Self {
        Self {
            delta_max: 0.5,
            a_max: 3.0,
        }
    }
}

/// Time-indexed state sequence with a fixed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<VehicleState>,
    /// Time step between consecutive states (s).
    pub dt: f64,
}

impl Trajectory {
    pub fn new(states: Vec<VehicleState>, dt: f64) -> Self {
        Self { states, dt }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of propagation steps (states minus one).
    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn positions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.states.iter().map(|s| (s.x, s.y))
    }
}

/// Advance one state by one step of the bicycle kinematics.
///
/// The slip angle is derived from the steering applied during this step and
/// stored on the returned state.
pub fn step(
    state: &VehicleState,
    input: ControlInput,
    geom: &VehicleGeometry,
    dt: f64,
) -> Result<VehicleState> {
    if !state.is_finite() || !input.delta.is_finite() || !input.a.is_finite() || dt <= 0.0 {
        return Err(Error::NonFiniteState);
    }
    let beta = geom.slip_angle(input.delta);
    let next = VehicleState {
        x: dt * state.v * (state.psi + beta).cos() + state.x,
        y: dt * state.v * (state.psi + beta).sin() + state.y,
        psi: state.v / geom.l_r * beta.sin() + state.psi,
        // Reverse motion is out of scope; clamp speed at zero.
        v: (dt * input.a + state.v).max(0.0),
        beta,
    };
    if !next.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok(next)
}

/// Propagate a control sequence from an initial state.
///
/// The result has `controls.len() + 1` states, the first being `initial`.
/// Headings come from the model itself; no finite differencing is needed for
/// the ego vehicle.
pub fn rollout(
    initial: &VehicleState,
    controls: &[ControlInput],
    geom: &VehicleGeometry,
    dt: f64,
) -> Result<Trajectory> {
    if controls.is_empty() {
        return Err(Error::EmptyControls);
    }
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(*initial);
    let mut current = *initial;
    for input in controls {
        current = step(&current, *input, geom, dt)?;
        states.push(current);
    }
    Ok(Trajectory::new(states, dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn geom() -> VehicleGeometry {
        VehicleGeometry::passenger_car()
    }

    #[test]
    fn straight_line_zero_steering() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 10.0);
        let next = step(&s, ControlInput::coast(), &geom(), 0.1).unwrap();
        assert_eq!(next.x, 1.0);
        assert_eq!(next.y, 0.0);
        assert_eq!(next.psi, 0.0);
        assert_eq!(next.v, 10.0);
        assert_eq!(next.beta, 0.0);
    }

    #[test]
    fn acceleration_with_constant_heading() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 10.0);
        let next = step(&s, ControlInput::new(0.0, 1.0), &geom(), 0.1).unwrap();
        assert_eq!(next.v, 10.1);
        assert_eq!(next.x, 1.0);
        assert_eq!(next.y, 0.0);
    }

    #[test]
    fn steered_step_matches_scalar_oracle() {
        // Hand-evaluated with a scalar calculator: slip angle first, then the
        // position/heading/speed updates at the previous-step values.
        let s = VehicleState::new(0.0, 0.0, 0.0, 10.0);
        let next = step(&s, ControlInput::new(0.1, 0.0), &geom(), 0.1).unwrap();
        assert_abs_diff_eq!(next.beta, 0.050_125_313_073_171_44, epsilon = 1e-15);
        assert_abs_diff_eq!(next.x, 0.998_743_989_509_816_2, epsilon = 1e-15);
        assert_abs_diff_eq!(next.y, 0.05010432534239103, epsilon = 1e-15);
        assert_abs_diff_eq!(next.psi, 0.40083460273912824, epsilon = 1e-15);
        assert_eq!(next.v, 10.0);
    }

    #[test]
    fn speed_clamped_at_zero() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 0.1);
        let next = step(&s, ControlInput::new(0.0, -3.0), &geom(), 0.1).unwrap();
        assert_eq!(next.v, 0.0);
    }

    #[test]
    fn non_finite_state_rejected() {
        let s = VehicleState::new(f64::NAN, 0.0, 0.0, 10.0);
        assert!(matches!(
            step(&s, ControlInput::coast(), &geom(), 0.1),
            Err(Error::NonFiniteState)
        ));
    }

    #[test]
    fn zero_input_fixpoint() {
        let s = VehicleState::new(3.0, -2.0, 0.7, 0.0);
        let next = step(&s, ControlInput::coast(), &geom(), 0.1).unwrap();
        assert_eq!(next, VehicleState { beta: 0.0, ..s });
    }

    #[test]
    fn single_control_rollout_reduces_to_step() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 10.0);
        let input = ControlInput::new(0.05, 0.5);
        let traj = rollout(&s, &[input], &geom(), 0.1).unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj.states[0], s);
        assert_eq!(traj.states[1], step(&s, input, &geom(), 0.1).unwrap());
    }

    #[test]
    fn zero_controls_give_collinear_points() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 10.0);
        let controls = vec![ControlInput::coast(); 10];
        let traj = rollout(&s, &controls, &geom(), 0.1).unwrap();
        for (i, st) in traj.states.iter().enumerate() {
            assert_abs_diff_eq!(st.x, i as f64, epsilon = 1e-12);
            assert_eq!(st.y, 0.0);
            assert_eq!(st.psi, 0.0);
        }
    }

    #[test]
    fn constant_steering_arc_matches_step_oracle() {
        // Independent step-by-step accumulation of the heading increments.
        let s = VehicleState::new(0.0, 0.0, 0.0, 10.0);
        let g = geom();
        let controls = vec![ControlInput::new(0.05, 0.0); 20];
        let traj = rollout(&s, &controls, &g, 0.1).unwrap();

        let beta = (g.l_r / g.wheelbase() * 0.05f64.tan()).atan();
        let expected_psi: f64 = (0..20).map(|_| 10.0 / g.l_r * beta.sin()).sum();
        assert_abs_diff_eq!(traj.states[20].psi, expected_psi, epsilon = 1e-12);
        // Frozen from the same oracle script.
        assert_abs_diff_eq!(traj.states[20].psi, 4.002_084_127_383_466, epsilon = 1e-12);
        assert_abs_diff_eq!(traj.states[20].x, -3.1645355085096334, epsilon = 1e-12);
        assert_abs_diff_eq!(traj.states[20].y, 8.531_051_938_312_686, epsilon = 1e-12);
    }

    #[test]
    fn empty_controls_rejected() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 10.0);
        assert!(matches!(
            rollout(&s, &[], &geom(), 0.1),
            Err(Error::EmptyControls)
        ));
    }

    #[test]
    fn translation_equivariance() {
        let s = VehicleState::new(0.0, 0.0, 0.3, 8.0);
        let controls: Vec<ControlInput> = (0..15)
            .map(|i| ControlInput::new(0.02 * (i as f64 * 0.7).sin(), 0.3))
            .collect();
        let base = rollout(&s, &controls, &geom(), 0.1).unwrap();
        let shifted = VehicleState {
            x: s.x + 11.0,
            y: s.y - 4.0,
            ..s
        };
        let moved = rollout(&shifted, &controls, &geom(), 0.1).unwrap();
        for (a, b) in base.states.iter().zip(&moved.states) {
            assert_abs_diff_eq!(b.x, a.x + 11.0, epsilon = 1e-12);
            assert_abs_diff_eq!(b.y, a.y - 4.0, epsilon = 1e-12);
            assert_eq!(a.psi, b.psi);
            assert_eq!(a.v, b.v);
        }
    }

    #[test]
    fn perturbation_response_is_first_order() {
        // Perturbing one steering entry by h moves downstream positions by
        // O(h): the finite-difference slope is stable across two h values.
        let s = VehicleState::new(0.0, 0.0, 0.0, 10.0);
        let g = geom();
        let controls = vec![ControlInput::coast(); 20];
        let base = rollout(&s, &controls, &g, 0.1).unwrap();

        let response = |h: f64| {
            let mut c = controls.clone();
            c[5].delta += h;
            let t = rollout(&s, &c, &g, 0.1).unwrap();
            let last = t.states[20];
            ((last.x - base.states[20].x).powi(2) + (last.y - base.states[20].y).powi(2)).sqrt()
        };
        let slope_a = response(1e-6) / 1e-6;
        let slope_b = response(1e-7) / 1e-7;
        assert_abs_diff_eq!(slope_a, slope_b, epsilon = slope_a.abs() * 1e-3);
    }
}
