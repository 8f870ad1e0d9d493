//! Scenario configuration and construction.
//!
//! A scenario is described by one human-editable TOML file; randomized
//! quantities (the surrounding vehicles' longitudinal positions) are sampled
//! from a seed with rejection of overlapping placements.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::CostWeights;
use crate::error::{Error, Result};
use crate::geometry::{pairwise_distance, Footprint, LaneLayout, Point, SafetySpec};
use crate::kinematics::{ControlBounds, VehicleGeometry, VehicleState};
use crate::planner::{PlanBudgets, PlanRequest, TargetState};
use crate::prediction::{
    ConstantVelocityPredictor, IdmMobilPredictor, IdmParams, MobilParams, ObservationMatrix,
    Predictor,
};
use crate::pso::SwarmConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub seed: u64,
    /// Simulation step (s).
    pub dt: f64,
    /// Planning horizon N (steps).
    pub horizon: usize,
    /// Observation history length fed to the predictor (steps).
    pub n_obs: usize,
    /// Prediction horizon produced by the predictor (steps).
    pub n_pred: usize,
    /// Safety buffer (m).
    pub epsilon: f64,
    /// Longitudinal distance from the ego to the merge target (m).
    pub merge_distance: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            seed: 42,
            dt: 0.1,
            horizon: 30,
            n_obs: 8,
            n_pred: 30,
            epsilon: 2.0,
            merge_distance: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadSection {
    pub lanes: usize,
    pub lane_width: f64,
    pub y_min: f64,
}

impl Default for RoadSection {
    fn default() -> Self {
        Self {
            lanes: 2,
            lane_width: 3.5,
            y_min: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EgoSection {
    /// Starting lane index (bottom = 0).
    pub lane: usize,
    pub target_lane: usize,
    pub x: f64,
    pub speed: f64,
}

impl Default for EgoSection {
    fn default() -> Self {
        Self {
            lane: 1,
            target_lane: 0,
            x: 0.0,
            speed: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSection {
    /// Body length (m).
    pub length: f64,
    /// Body width (m).
    pub width: f64,
    /// Center-to-axle distance, both axles (m).
    pub axle_distance: f64,
}

impl Default for VehicleSection {
    fn default() -> Self {
        Self {
            length: 5.0,
            width: 2.0,
            axle_distance: 1.25,
        }
    }
}

impl VehicleSection {
    pub fn geometry(&self) -> VehicleGeometry {
        VehicleGeometry {
            l_f: self.axle_distance,
            l_r: self.axle_distance,
            half_length: self.length / 2.0,
            half_width: self.width / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    /// Lane the surrounding vehicles drive in.
    pub lane: usize,
    /// Their common speed (m/s).
    pub speed: f64,
    /// One longitudinal spawn band per surrounding vehicle (m, absolute road
    /// coordinates); the vehicle count is the number of bands.
    pub bands: Vec<[f64; 2]>,
    /// Minimum clearance between spawned vehicles (m).
    pub spawn_clearance: f64,
    /// Rejection-sampling attempt cap.
    pub max_attempts: usize,
}

impl TrafficSection {
    pub fn count(&self) -> usize {
        self.bands.len()
    }
}

impl Default for TrafficSection {
    fn default() -> Self {
        Self {
            lane: 0,
            speed: 8.0,
            bands: vec![[-8.5, -5.0], [11.8, 13.8]],
            spawn_clearance: 0.5,
            max_attempts: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorSection {
    /// `idm` or `constant-velocity`.
    pub kind: String,
    pub idm: IdmParams,
    pub mobil: MobilParams,
}

impl Default for PredictorSection {
    fn default() -> Self {
        Self {
            kind: "idm".to_owned(),
            idm: IdmParams {
                // The surrounding traffic cruises near its spawn speed.
                v_desired: 8.5,
                ..IdmParams::default()
            },
            mobil: MobilParams {
                // Platoon vehicles hold their lane unless strongly pressed.
                accel_threshold: 3.0,
                ..MobilParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub max_rounds: usize,
    /// Outer wall-clock cap (ms); defaults to twice the swarm budget.
    pub wall_ms: Option<f64>,
    /// Lateral tolerance for a completed merge (m).
    pub merge_tolerance: f64,
    /// Wall-clock bound below which a feasible plan counts as a success (ms).
    pub success_budget_ms: f64,
    pub mc_max_modifications: usize,
    pub mc_margin: f64,
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self {
            max_rounds: 5,
            wall_ms: None,
            merge_tolerance: 0.2,
            success_budget_ms: 200.0,
            mc_max_modifications: 12,
            mc_margin: 15.0,
        }
    }
}

/// Full scenario description; the default value is the nominal two-lane,
/// three-vehicle merge experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub road: RoadSection,
    pub ego: EgoSection,
    pub vehicle: VehicleSection,
    pub traffic: TrafficSection,
    pub predictor: PredictorSection,
    pub pso: SwarmConfig,
    pub bounds: ControlBounds,
    pub weights: CostWeights,
    pub planner: PlannerSection,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn layout(&self) -> LaneLayout {
        LaneLayout {
            lane_width: self.road.lane_width,
            lane_count: self.road.lanes,
            y_min: self.road.y_min,
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_owned()));
        if self.road.lanes < 2 {
            return fail("road.lanes must be at least 2");
        }
        if self.ego.lane >= self.road.lanes || self.ego.target_lane >= self.road.lanes {
            return fail("ego.lane and ego.target_lane must be valid lane indices");
        }
        if self.traffic.lane >= self.road.lanes {
            return fail("traffic.lane must be a valid lane index");
        }
        if self.scenario.dt <= 0.0 {
            return fail("scenario.dt must be positive");
        }
        if self.scenario.horizon < 4 {
            return fail("scenario.horizon must be at least 4 steps");
        }
        if self.scenario.n_obs < 2 {
            return fail("scenario.n_obs must be at least 2");
        }
        if self.scenario.epsilon < 0.0 {
            return fail("scenario.epsilon must be nonnegative");
        }
        if self.traffic.bands.iter().any(|b| b[1] < b[0]) {
            return fail("traffic spawn band is empty");
        }
        if !matches!(self.predictor.kind.as_str(), "idm" | "constant-velocity") {
            return fail("predictor.kind must be 'idm' or 'constant-velocity'");
        }
        if self.vehicle.length <= 0.0
            || self.vehicle.width <= 0.0
            || self.vehicle.length <= self.vehicle.width
        {
            return fail("vehicle dimensions must be positive with length > width");
        }
        if self.pso.particle_count < 1 || self.pso.iterations < 1 {
            return fail("pso.particle_count and pso.iterations must be at least 1");
        }
        if !(self.pso.inertia_end > 0.0 && self.pso.inertia_end <= self.pso.inertia_start) {
            return fail("pso inertia schedule requires 0 < inertia_end <= inertia_start");
        }
        if self.pso.c1 <= 0.0 || self.pso.c2 <= 0.0 {
            return fail("pso acceleration coefficients must be positive");
        }
        if self.pso.collision_boost < 1.0 {
            return fail("pso.collision_boost must be at least 1");
        }
        let w = &self.weights;
        if [w.w_ref, w.w_head, w.w_col, w.w_a, w.w_j, w.w_s, w.w_la]
            .iter()
            .any(|v| *v < 0.0)
        {
            return fail("cost weights must be nonnegative");
        }
        Ok(())
    }
}

/// A fully instantiated scenario: configuration plus the sampled surrounding
/// vehicle positions.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub seed: u64,
    /// Sampled longitudinal positions of the surrounding vehicles (m).
    pub traffic_x: Vec<f64>,
}

/// Instantiate a scenario, rejection-sampling the surrounding vehicles'
/// longitudinal positions until none overlap (the ego included).
pub fn build_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let layout = config.layout();
    let geom = config.vehicle.geometry();
    let traffic_y = layout.center(config.traffic.lane);
    let ego_fp = Footprint::new(
        Point::new(config.ego.x, layout.center(config.ego.lane)),
        0.0,
        &geom,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..config.traffic.max_attempts.max(1) {
        let xs: Vec<f64> = config
            .traffic
            .bands
            .iter()
            .map(|band| rng.random_range(band[0]..=band[1]))
            .collect();
        let fps: Vec<Footprint> = xs
            .iter()
            .map(|&x| Footprint::new(Point::new(x, traffic_y), 0.0, &geom))
            .collect();
        let mut ok = true;
        'check: for (i, fp) in fps.iter().enumerate() {
            if pairwise_distance(fp, &ego_fp) < config.traffic.spawn_clearance {
                ok = false;
                break 'check;
            }
            for other in fps.iter().skip(i + 1) {
                if pairwise_distance(fp, other) < config.traffic.spawn_clearance {
                    ok = false;
                    break 'check;
                }
            }
        }
        if ok {
            return Ok(Scenario {
                config: config.clone(),
                seed,
                traffic_x: xs,
            });
        }
    }
    Err(Error::SpawnRejection(config.traffic.max_attempts))
}

impl Scenario {
    /// Observation history: each surrounding vehicle drove straight at its
    /// configured speed for the past `n_obs` steps, ending at its sampled
    /// position now.
    pub fn observations(&self) -> Result<ObservationMatrix> {
        let cfg = &self.config;
        let layout = cfg.layout();
        let y = layout.center(cfg.traffic.lane);
        let n_obs = cfg.scenario.n_obs;
        let steps = (0..n_obs)
            .map(|k| {
                let t = (k as f64 - (n_obs as f64 - 1.0)) * cfg.scenario.dt;
                self.traffic_x
                    .iter()
                    .map(|&x| Point::new(x + cfg.traffic.speed * t, y))
                    .collect()
            })
            .collect();
        ObservationMatrix::new(steps)
    }

    pub fn plan_request(&self) -> Result<PlanRequest> {
        let cfg = &self.config;
        let layout = cfg.layout();
        let geom = cfg.vehicle.geometry();
        Ok(PlanRequest {
            current: VehicleState::new(cfg.ego.x, layout.center(cfg.ego.lane), 0.0, cfg.ego.speed),
            target: TargetState {
                x: cfg.ego.x + cfg.scenario.merge_distance,
                y: layout.center(cfg.ego.target_lane),
                psi: 0.0,
            },
            observations: self.observations()?,
            layout,
            target_lane: cfg.ego.target_lane,
            ego_geom: geom,
            other_geoms: vec![geom; cfg.traffic.count()],
            safety: SafetySpec::new(cfg.scenario.epsilon),
            bounds: cfg.bounds,
            horizon: cfg.scenario.horizon,
            dt: cfg.scenario.dt,
            merge_tolerance: cfg.planner.merge_tolerance,
            budgets: PlanBudgets {
                max_rounds: cfg.planner.max_rounds,
                wall_ms: cfg.planner.wall_ms,
            },
        })
    }

    pub fn predictor(&self) -> Result<Box<dyn Predictor>> {
        let cfg = &self.config;
        match cfg.predictor.kind.as_str() {
            "constant-velocity" => Ok(Box::new(ConstantVelocityPredictor::new(
                cfg.scenario.n_pred,
            ))),
            "idm" => {
                let geom = cfg.vehicle.geometry();
                Ok(Box::new(IdmMobilPredictor {
                    n_pred: cfg.scenario.n_pred,
                    dt: cfg.scenario.dt,
                    layout: cfg.layout(),
                    idm: cfg.predictor.idm,
                    mobil: cfg.predictor.mobil,
                    vehicle_half_length: geom.half_length,
                    ego_half_length: geom.half_length,
                }))
            }
            other => Err(Error::Config(format!("unknown predictor kind '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        assert!(ScenarioConfig::default().validate().is_ok());
    }

    #[test]
    fn build_is_deterministic_per_seed() {
        let cfg = ScenarioConfig::default();
        let a = build_scenario(&cfg, 7).unwrap();
        let b = build_scenario(&cfg, 7).unwrap();
        assert_eq!(a.traffic_x, b.traffic_x);
        let c = build_scenario(&cfg, 8).unwrap();
        assert_ne!(a.traffic_x, c.traffic_x);
    }

    #[test]
    fn spawned_vehicles_do_not_overlap() {
        let cfg = ScenarioConfig::default();
        let geom = cfg.vehicle.geometry();
        for seed in 0..50 {
            let s = build_scenario(&cfg, seed).unwrap();
            let y = cfg.layout().center(cfg.traffic.lane);
            let fps: Vec<Footprint> = s
                .traffic_x
                .iter()
                .map(|&x| Footprint::new(Point::new(x, y), 0.0, &geom))
                .collect();
            for i in 0..fps.len() {
                for j in i + 1..fps.len() {
                    assert!(pairwise_distance(&fps[i], &fps[j]) >= cfg.traffic.spawn_clearance);
                }
            }
        }
    }

    #[test]
    fn narrow_band_exhausts_rejection_attempts() {
        let mut cfg = ScenarioConfig::default();
        cfg.traffic.bands = vec![[10.0, 11.0], [10.0, 11.0], [10.0, 11.0]];
        cfg.traffic.max_attempts = 20;
        assert!(matches!(
            build_scenario(&cfg, 1),
            Err(Error::SpawnRejection(20))
        ));
    }

    #[test]
    fn observations_end_at_the_sampled_positions() {
        let cfg = ScenarioConfig::default();
        let s = build_scenario(&cfg, 3).unwrap();
        let obs = s.observations().unwrap();
        assert_eq!(obs.n_obs(), cfg.scenario.n_obs);
        assert_eq!(obs.n_veh(), cfg.traffic.count());
        for (i, &x) in s.traffic_x.iter().enumerate() {
            assert_eq!(obs.latest(i).x, x);
        }
    }

    #[test]
    fn bad_config_is_descriptive() {
        let err = ScenarioConfig::from_toml_str("[scenario]\ndt = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("dt"));
        let parse_err = ScenarioConfig::from_toml_str("not toml at all [").unwrap_err();
        assert!(matches!(parse_err, Error::Config(_)));
    }

    #[test]
    fn invariant_violations_are_rejected() {
        for (toml, needle) in [
            ("[pso]\nparticle_count = 0\n", "particle_count"),
            ("[pso]\ninertia_end = 1.2\n", "inertia"),
            ("[pso]\ncollision_boost = 0.5\n", "collision_boost"),
            ("[weights]\nw_ref = -1.0\n", "weights"),
            ("[vehicle]\nlength = 1.0\nwidth = 2.0\n", "length > width"),
        ] {
            let err = ScenarioConfig::from_toml_str(toml).unwrap_err();
            assert!(err.to_string().contains(needle), "{toml}: {err}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_toml_str("[scenario]\nnonsense = 4\n").unwrap_err();
        assert!(err.to_string().contains("nonsense"));
    }
}
