//! Interaction-aware substitute predictor: intelligent-driver-model
//! car-following with MOBIL lane-change decisions.
//!
//! Each surrounding vehicle is rolled forward against its current leader;
//! the ego's planned trajectory participates as an obstacle whenever the
//! plan puts the ego ahead of a vehicle in the same lane, so a cut-in is
//! predicted to make the follower yield.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LaneLayout, Point};
use crate::kinematics::Trajectory;

use super::{ObservationMatrix, PredictionMatrix, Predictor};

/// Intelligent driver model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    /// Desired free-flow speed (m/s).
    pub v_desired: f64,
    /// Desired time headway (s).
    pub time_headway: f64,
    /// Minimum standstill gap (m).
    pub min_gap: f64,
    /// Maximum acceleration (m/s^2).
    pub max_accel: f64,
    /// Comfortable deceleration (m/s^2).
    pub comfortable_decel: f64,
    /// Free-flow exponent.
    pub exponent: f64,
    /// Sensing range: vehicles farther ahead than this are not leaders (m).
    pub interaction_range: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v_desired: 15.0,
            time_headway: 1.0,
            min_gap: 2.0,
            max_accel: 1.5,
            comfortable_decel: 2.0,
            exponent: 4.0,
            interaction_range: 100.0,
        }
    }
}

/// MOBIL lane-change parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilParams {
    /// Politeness factor weighting follower disadvantages.
    pub politeness: f64,
    /// Acceleration-advantage threshold to trigger a change (m/s^2).
    pub accel_threshold: f64,
    /// Maximum braking imposed on the new follower (m/s^2).
    pub b_safe: f64,
}

impl Default for MobilParams {
    fn default() -> Self {
        Self {
            politeness: 0.3,
            accel_threshold: 0.1,
            b_safe: 3.0,
        }
    }
}

/// Hard deceleration floor applied to the model output (m/s^2).
const MAX_BRAKE: f64 = 10.0;
/// Duration of a lateral lane transition (s).
const LANE_CHANGE_TIME: f64 = 2.0;
/// Hold time after a completed lane change before another may start (s).
const LANE_CHANGE_COOLDOWN: f64 = 4.0;

#[derive(Debug, Clone, Copy)]
struct Agent {
    x: f64,
    y: f64,
    v: f64,
    lane: usize,
    /// Lane being merged into while laterally transitioning.
    target_lane: Option<usize>,
    /// Steps left before another lane change may start.
    cooldown: usize,
    half_length: f64,
}

/// IDM acceleration toward an optional leader `(position, speed, half_length)`.
fn idm_accel(params: &IdmParams, agent: &Agent, leader: Option<(f64, f64, f64)>) -> f64 {
    let free = params.max_accel * (1.0 - (agent.v / params.v_desired).powf(params.exponent));
    let accel = match leader {
        None => free,
        Some((lead_x, lead_v, lead_half_len)) => {
            let gap = lead_x - agent.x - (lead_half_len + agent.half_length);
            let approach = agent.v - lead_v;
            let desired_gap = params.min_gap
                + (agent.v * params.time_headway
                    + agent.v * approach
                        / (2.0 * (params.max_accel * params.comfortable_decel).sqrt()))
                .max(0.0);
            if gap <= 0.0 {
                -MAX_BRAKE
            } else {
                free - params.max_accel * (desired_gap / gap).powi(2)
            }
        }
    };
    accel.max(-MAX_BRAKE)
}

/// IDM + MOBIL rollout of surrounding vehicles, conditioned on the ego plan.
#[derive(Debug, Clone)]
pub struct IdmMobilPredictor {
    pub n_pred: usize,
    pub dt: f64,
    pub layout: LaneLayout,
    pub idm: IdmParams,
    pub mobil: MobilParams,
    /// Half-length of the surrounding vehicles (m).
    pub vehicle_half_length: f64,
    /// Half-length of the ego vehicle (m).
    pub ego_half_length: f64,
}

impl IdmMobilPredictor {
    pub fn new(n_pred: usize, dt: f64, layout: LaneLayout) -> Self {
        Self {
            n_pred,
            dt,
            layout,
            idm: IdmParams::default(),
            mobil: MobilParams::default(),
            vehicle_half_length: 2.5,
            ego_half_length: 2.5,
        }
    }

    fn agents_from_observations(&self, obs: &ObservationMatrix) -> Result<Vec<Agent>> {
        let mut agents = Vec::with_capacity(obs.n_veh());
        for i in 0..obs.n_veh() {
            let pos = obs.latest(i);
            let disp = obs.last_displacement(i)?;
            let lane = self.layout.lane_of(pos.y).ok_or(Error::MissingLane(i))?;
            agents.push(Agent {
                x: pos.x,
                y: pos.y,
                // Longitudinal speed from a backward difference.
                v: (disp.x / self.dt).max(0.0),
                lane,
                target_lane: None,
                cooldown: 0,
                half_length: self.vehicle_half_length,
            });
        }
        Ok(agents)
    }

    /// Nearest leader of `agent` in `lane` among the other agents and the
    /// ego plan state, as `(x, v, half_length)`.
    fn leader_in_lane(
        &self,
        agents: &[Agent],
        me: usize,
        lane: usize,
        ego: Option<&Agent>,
        from_x: f64,
    ) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        let range = self.idm.interaction_range;
        let mut consider = |x: f64, v: f64, hl: f64| {
            if x > from_x && x - from_x <= range && best.is_none_or(|(bx, _, _)| x < bx) {
                best = Some((x, v, hl));
            }
        };
        for (j, other) in agents.iter().enumerate() {
            if j != me && occupies_lane(other, lane) {
                consider(other.x, other.v, other.half_length);
            }
        }
        if let Some(e) = ego {
            if occupies_lane(e, lane) {
                consider(e.x, e.v, e.half_length);
            }
        }
        best
    }

    /// Nearest follower behind `from_x` in `lane`, as an agent index or the
    /// ego marker (`usize::MAX`).
    fn follower_in_lane(
        &self,
        agents: &[Agent],
        me: usize,
        lane: usize,
        ego: Option<&Agent>,
        from_x: f64,
    ) -> Option<usize> {
        let range = self.idm.interaction_range;
        let mut best: Option<(usize, f64)> = None;
        for (j, other) in agents.iter().enumerate() {
            if j != me && occupies_lane(other, lane) && other.x < from_x && from_x - other.x <= range
                && best.is_none_or(|(_, bx)| other.x > bx) {
                    best = Some((j, other.x));
                }
        }
        if let Some(e) = ego {
            if occupies_lane(e, lane) && e.x < from_x && from_x - e.x <= range
                && best.is_none_or(|(_, bx)| e.x > bx) {
                    best = Some((usize::MAX, e.x));
                }
        }
        best.map(|(j, _)| j)
    }

    fn mobil_wants_change(
        &self,
        agents: &[Agent],
        me: usize,
        target: usize,
        ego: Option<&Agent>,
    ) -> bool {
        let agent = &agents[me];
        let get = |idx: usize| -> Agent {
            if idx == usize::MAX {
                *ego.expect("ego follower only selected when ego present")
            } else {
                agents[idx]
            }
        };

        let a_current = idm_accel(
            &self.idm,
            agent,
            self.leader_in_lane(agents, me, agent.lane, ego, agent.x),
        );
        let a_target = idm_accel(
            &self.idm,
            agent,
            self.leader_in_lane(agents, me, target, ego, agent.x),
        );

        // New follower must not be forced to brake harder than b_safe.
        let mut follower_terms = 0.0;
        if let Some(nf) = self.follower_in_lane(agents, me, target, ego, agent.x) {
            let f = get(nf);
            let before = idm_accel(
                &self.idm,
                &f,
                self.leader_in_lane(agents, me, target, ego, f.x),
            );
            let after = idm_accel(&self.idm, &f, Some((agent.x, agent.v, agent.half_length)));
            if after < -self.mobil.b_safe {
                return false;
            }
            follower_terms += after - before;
        }
        if let Some(of) = self.follower_in_lane(agents, me, agent.lane, ego, agent.x) {
            let f = get(of);
            let before = idm_accel(&self.idm, &f, Some((agent.x, agent.v, agent.half_length)));
            // After the change the old follower sees whatever was ahead of us.
            let after = idm_accel(
                &self.idm,
                &f,
                self.leader_in_lane(agents, me, agent.lane, ego, agent.x),
            );
            follower_terms += after - before;
        }

        a_target - a_current + self.mobil.politeness * follower_terms > self.mobil.accel_threshold
    }
}

/// A laterally transitioning agent blocks both its source and target lanes.
fn occupies_lane(agent: &Agent, lane: usize) -> bool {
    agent.lane == lane || agent.target_lane == Some(lane)
}

impl Predictor for IdmMobilPredictor {
    fn predict(&self, obs: &ObservationMatrix, ego_plan: &Trajectory) -> Result<PredictionMatrix> {
        let mut agents = self.agents_from_observations(obs)?;
        if agents.is_empty() {
            return Ok(PredictionMatrix::empty(self.n_pred));
        }
        let lateral_rate = self.layout.lane_width / LANE_CHANGE_TIME;
        let mut steps = Vec::with_capacity(self.n_pred);

        for k in 1..=self.n_pred {
            // Ego plan state for this step; hold the last state if the plan
            // is shorter than the prediction horizon.
            let ego = (!ego_plan.states.is_empty()).then(|| {
                let s = &ego_plan.states[k.min(ego_plan.states.len() - 1)];
                Agent {
                    x: s.x,
                    y: s.y,
                    v: s.v,
                    lane: self.layout.lane_of(s.y).unwrap_or(usize::MAX - 1),
                    target_lane: None,
                    cooldown: 0,
                    half_length: self.ego_half_length,
                }
            });
            let ego_ref = ego.as_ref();

            // Decisions and accelerations from a snapshot of the step start,
            // applied simultaneously.
            let snapshot = agents.clone();
            let mut updated = snapshot.clone();
            for (i, agent) in snapshot.iter().enumerate() {
                let mut next = *agent;

                next.cooldown = next.cooldown.saturating_sub(1);
                if next.target_lane.is_none() && next.cooldown == 0 {
                    for target in adjacent_lanes(agent.lane, self.layout.lane_count) {
                        if self.mobil_wants_change(&snapshot, i, target, ego_ref) {
                            next.target_lane = Some(target);
                            break;
                        }
                    }
                }

                // Longitudinal update against the most constraining leader.
                let mut accel = idm_accel(
                    &self.idm,
                    agent,
                    self.leader_in_lane(&snapshot, i, agent.lane, ego_ref, agent.x),
                );
                if let Some(target) = next.target_lane {
                    accel = accel.min(idm_accel(
                        &self.idm,
                        agent,
                        self.leader_in_lane(&snapshot, i, target, ego_ref, agent.x),
                    ));
                }
                let v_next = (agent.v + accel * self.dt).max(0.0);
                next.x += 0.5 * (agent.v + v_next) * self.dt;
                next.v = v_next;

                if let Some(target) = next.target_lane {
                    let center = self.layout.center(target);
                    let dy = center - next.y;
                    let max_move = lateral_rate * self.dt;
                    if dy.abs() <= max_move {
                        next.y = center;
                        next.lane = target;
                        next.target_lane = None;
                        next.cooldown = (LANE_CHANGE_COOLDOWN / self.dt).round() as usize;
                    } else {
                        next.y += max_move * dy.signum();
                    }
                }

                updated[i] = next;
            }
            agents = updated;
            steps.push(agents.iter().map(|a| Point::new(a.x, a.y)).collect());
        }

        PredictionMatrix::new(steps)
    }

    fn n_pred(&self) -> usize {
        self.n_pred
    }

    fn name(&self) -> &'static str {
        "idm-mobil"
    }
}

fn adjacent_lanes(lane: usize, count: usize) -> impl Iterator<Item = usize> {
    let down = lane.checked_sub(1);
    let up = (lane + 1 < count).then_some(lane + 1);
    down.into_iter().chain(up)
}
