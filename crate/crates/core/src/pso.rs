//! Particle swarm search over steering-angle sequences.
//!
//! Each particle is a full steering sequence over the planning horizon. The
//! velocity update is
//!
//! ```text
//! v' = w v + c1 r1 (p_lb - p) + c2 r2 (p_gb - p)
//! ```
//!
//! with fresh uniform `r1, r2` per particle per update, scaled by an
//! adaptive boost when the particle's last rollout violated safety. Particle
//! positions advance by the updated velocity, are clamped to the steering
//! bounds, rolled through the kinematics, and scored by the seven-term cost.
//! Local bests update on strict improvement; the global best updates when a
//! local best beats it.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{evaluate, CostBreakdown, CostWeights, Reference};
use crate::error::Result;
use crate::geometry::{ObstacleField, SafetySpec};
use crate::kinematics::{rollout, ControlBounds, ControlInput, Trajectory, VehicleGeometry, VehicleState};
use crate::prediction::{ObservationMatrix, PredictionMatrix, Predictor};

/// Swarm parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmConfig {
    /// Number of candidate particles.
    pub particle_count: usize,
    /// Maximum iterations.
    pub iterations: usize,
    /// Inertia weight at the first iteration.
    pub inertia_start: f64,
    /// Inertia weight reached at the last iteration (linear schedule).
    pub inertia_end: f64,
    /// Self-cognition acceleration coefficient.
    pub c1: f64,
    /// Social acceleration coefficient.
    pub c2: f64,
    /// Half-width of the uniform band around the reference steering used to
    /// initialize particle positions (rad).
    pub init_position_range: f64,
    /// Half-width of the uniform initial velocity distribution (rad/step).
    pub init_velocity_range: f64,
    /// Velocity multiplier applied after a safety-violating evaluation.
    pub collision_boost: f64,
    pub seed: u64,
    /// Wall-clock budget for the whole run (ms); checked between iterations.
    pub time_budget_ms: Option<f64>,
    /// Re-query the predictor with the global-best plan every this many
    /// iterations (0 disables re-querying).
    pub predict_every: usize,
    /// Draw r1/r2 per dimension instead of per particle.
    pub random_per_dimension: bool,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            particle_count: 2,
            iterations: 80,
            inertia_start: 0.9,
            inertia_end: 0.4,
            c1: 2.0,
            c2: 2.0,
            init_position_range: 0.003,
            init_velocity_range: 0.001,
            collision_boost: 2.0,
            seed: 0,
            time_budget_ms: Some(200.0),
            predict_every: 1,
            random_per_dimension: false,
        }
    }
}

/// A candidate steering sequence with its swarm bookkeeping.
#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_cost: f64,
    /// Breakdown from the most recent evaluation.
    pub last_breakdown: CostBreakdown,
}

impl Particle {
    fn violated_safety(&self) -> bool {
        self.last_breakdown.f_col > 0.0
    }
}

/// Everything a swarm evaluation needs besides the predictions.
#[derive(Debug, Clone)]
pub struct SwarmProblem<'a> {
    pub reference: &'a Reference,
    pub initial_state: VehicleState,
    pub ego_geom: VehicleGeometry,
    pub other_geoms: &'a [VehicleGeometry],
    pub safety: SafetySpec,
    pub weights: CostWeights,
    pub bounds: ControlBounds,
    pub dt: f64,
}

impl SwarmProblem<'_> {
    /// Controls for a candidate steering sequence: the particle supplies the
    /// steering, the reference supplies the acceleration profile.
    fn controls(&self, steering: &[f64]) -> Vec<ControlInput> {
        steering
            .iter()
            .zip(&self.reference.accel)
            .map(|(&delta, &a)| self.bounds.clamp(ControlInput::new(delta, a)))
            .collect()
    }

    /// Roll out and score one candidate. Propagation failures mark the
    /// candidate unusable (infinite cost) instead of aborting the swarm.
    fn evaluate_candidate(
        &self,
        steering: &[f64],
        obstacles: &ObstacleField,
    ) -> (CostBreakdown, Option<Trajectory>) {
        let controls = self.controls(steering);
        match rollout(&self.initial_state, &controls, &self.ego_geom, self.dt) {
            Ok(traj) => match evaluate(
                &traj,
                steering,
                self.reference,
                obstacles,
                &self.safety,
                &self.weights,
                &self.ego_geom,
            ) {
                Ok(breakdown) => (breakdown, Some(traj)),
                Err(_) => (CostBreakdown::unusable(), None),
            },
            Err(_) => (CostBreakdown::unusable(), None),
        }
    }
}

/// Mutable swarm state.
#[derive(Debug, Clone)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub global_best_position: Vec<f64>,
    pub global_best_cost: f64,
    pub global_best_breakdown: CostBreakdown,
    pub global_best_trajectory: Option<Trajectory>,
}

/// Random coefficients for one particle's velocity update.
#[derive(Debug, Clone)]
pub enum RandomDraws {
    Scalar { r1: f64, r2: f64 },
    PerDimension { r1: Vec<f64>, r2: Vec<f64> },
}

impl RandomDraws {
    fn at(&self, k: usize) -> (f64, f64) {
        match self {
            RandomDraws::Scalar { r1, r2 } => (*r1, *r2),
            RandomDraws::PerDimension { r1, r2 } => (r1[k], r2[k]),
        }
    }

    fn draw(rng: &mut impl Rng, per_dimension: bool, dim: usize) -> Self {
        if per_dimension {
            RandomDraws::PerDimension {
                r1: (0..dim).map(|_| rng.random_range(0.0..=1.0)).collect(),
                r2: (0..dim).map(|_| rng.random_range(0.0..=1.0)).collect(),
            }
        } else {
            RandomDraws::Scalar {
                r1: rng.random_range(0.0..=1.0),
                r2: rng.random_range(0.0..=1.0),
            }
        }
    }
}

/// Per-iteration trace line: every particle's cost plus the running best
/// and its full term breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub particle_costs: Vec<f64>,
    pub global_best: f64,
    pub best_breakdown: CostBreakdown,
}

/// Outcome of one swarm run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwarmResult {
    /// Refined steering sequence.
    pub steering: Vec<f64>,
    /// Rollout of the refined sequence (dynamically feasible by construction).
    pub trajectory: Trajectory,
    pub breakdown: CostBreakdown,
    /// Predictions in force when the returned sequence was evaluated.
    pub predictions: PredictionMatrix,
    /// Iterations completed within the budget.
    pub iterations: usize,
    pub wall_ms: f64,
    /// Collision-free and within lane bounds.
    pub feasible: bool,
    pub diagnostic: Option<String>,
}

/// Particles start uniformly around the reference steering, with local bests
/// at the initial positions; costs are seeded by the caller's first
/// evaluation pass.
///
/// Draw order is fixed (per particle: all position entries, then all
/// velocity entries) so a seed fully determines the swarm.
pub fn initialize_swarm(
    reference: &Reference,
    config: &SwarmConfig,
    bounds: &ControlBounds,
    rng: &mut ChaCha8Rng,
) -> Swarm {
    let dim = reference.len();
    let r_pos = config.init_position_range.abs();
    let r_vel = config.init_velocity_range.abs();
    let particles = (0..config.particle_count)
        .map(|_| {
            let position: Vec<f64> = reference
                .steering
                .iter()
                .map(|&d| (d + rng.random_range(-r_pos..=r_pos)).clamp(-bounds.delta_max, bounds.delta_max))
                .collect();
            let velocity: Vec<f64> = (0..dim)
                .map(|_| rng.random_range(-r_vel..=r_vel))
                .collect();
            Particle {
                best_position: position.clone(),
                position,
                velocity,
                best_cost: f64::INFINITY,
                last_breakdown: CostBreakdown::unusable(),
            }
        })
        .collect();
    let particles: Vec<Particle> = particles;
    // The swarm best starts at the first particle with unusable cost; the
    // first finite evaluation replaces it.
    let seed_position = particles
        .first()
        .map(|p: &Particle| p.position.clone())
        .unwrap_or_default();
    Swarm {
        particles,
        global_best_position: seed_position,
        global_best_cost: f64::INFINITY,
        global_best_breakdown: CostBreakdown::unusable(),
        global_best_trajectory: None,
    }
}

/// One particle's velocity update, boosted when its last evaluation violated
/// safety.
pub fn update_velocity(
    particle: &Particle,
    global_best: &[f64],
    inertia: f64,
    config: &SwarmConfig,
    draws: &RandomDraws,
) -> Vec<f64> {
    let boost = if particle.violated_safety() {
        config.collision_boost
    } else {
        1.0
    };
    (0..particle.position.len())
        .map(|k| {
            let (r1, r2) = draws.at(k);
            let v = inertia * particle.velocity[k]
                + config.c1 * r1 * (particle.best_position[k] - particle.position[k])
                + config.c2 * r2 * (global_best[k] - particle.position[k]);
            boost * v
        })
        .collect()
}

/// One swarm iteration: move and evaluate every particle from a snapshot of
/// the current global best, then fold best updates in particle-index order.
pub fn step_swarm(
    swarm: &mut Swarm,
    problem: &SwarmProblem,
    obstacles: &ObstacleField,
    inertia: f64,
    config: &SwarmConfig,
    rng: &mut ChaCha8Rng,
) {
    let dim = swarm
        .particles
        .first()
        .map_or(0, |p| p.position.len());
    let draws: Vec<RandomDraws> = swarm
        .particles
        .iter()
        .map(|_| RandomDraws::draw(rng, config.random_per_dimension, dim))
        .collect();

    // Move and evaluate against the iteration-start global best; evaluations
    // are independent and could fan out to workers.
    let mut trajectories: Vec<Option<Trajectory>> = Vec::with_capacity(swarm.particles.len());
    for (particle, draw) in swarm.particles.iter_mut().zip(&draws) {
        let velocity = update_velocity(particle, &swarm.global_best_position, inertia, config, draw);
        for (p, v) in particle.position.iter_mut().zip(&velocity) {
            *p = (*p + v).clamp(-problem.bounds.delta_max, problem.bounds.delta_max);
        }
        particle.velocity = velocity;
        let (breakdown, traj) = problem.evaluate_candidate(&particle.position, obstacles);
        particle.last_breakdown = breakdown;
        trajectories.push(traj);
    }

    // Deterministic reduction: local best on strict improvement, then global
    // best when that local best beats it.
    for (particle, traj) in swarm.particles.iter_mut().zip(trajectories) {
        let cost = particle.last_breakdown.total;
        if cost < particle.best_cost {
            particle.best_cost = cost;
            particle.best_position.clone_from(&particle.position);
            if particle.best_cost < swarm.global_best_cost {
                swarm.global_best_cost = particle.best_cost;
                swarm.global_best_position.clone_from(&particle.position);
                swarm.global_best_breakdown = particle.last_breakdown;
                swarm.global_best_trajectory = traj;
            }
        }
    }
}

fn inertia_at(config: &SwarmConfig, iteration: usize) -> f64 {
    let steps = config.iterations.saturating_sub(1).max(1) as f64;
    config.inertia_start + (config.inertia_end - config.inertia_start) * iteration as f64 / steps
}

/// Run the swarm to completion (or until the time budget expires).
///
/// The passed-in predictions score iteration 0; afterwards the predictor is
/// re-queried every `predict_every` iterations with the current global-best
/// plan as the ego trajectory.
#[allow(clippy::too_many_arguments)]
pub fn run(
    problem: &SwarmProblem,
    predictor: &dyn Predictor,
    observations: &ObservationMatrix,
    initial_predictions: PredictionMatrix,
    config: &SwarmConfig,
    mut trace: Option<&mut Vec<IterationTrace>>,
) -> Result<SwarmResult> {
    let start = Instant::now();
    let horizon = problem.reference.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut swarm = initialize_swarm(problem.reference, config, &problem.bounds, &mut rng);

    let mut predictions = initial_predictions;
    let mut obstacles =
        ObstacleField::new(&predictions.tracks(), problem.other_geoms, horizon)?;
    // Snapshot of the predictions under which the global best was scored.
    let mut best_predictions = predictions.clone();

    // Seed local and global bests from the initial positions.
    for i in 0..swarm.particles.len() {
        let (breakdown, traj) = problem.evaluate_candidate(&swarm.particles[i].position, &obstacles);
        let particle = &mut swarm.particles[i];
        particle.last_breakdown = breakdown;
        particle.best_cost = breakdown.total;
        if breakdown.total < swarm.global_best_cost {
            swarm.global_best_cost = breakdown.total;
            swarm.global_best_position.clone_from(&particle.position);
            swarm.global_best_breakdown = breakdown;
            swarm.global_best_trajectory = traj;
            best_predictions = predictions.clone();
        }
    }

    let over_budget = |start: &Instant| {
        config
            .time_budget_ms
            .is_some_and(|ms| start.elapsed().as_secs_f64() * 1e3 >= ms)
    };

    let mut completed = 0;
    for iteration in 0..config.iterations {
        if over_budget(&start) {
            break;
        }
        if config.predict_every > 0 && iteration > 0 && iteration % config.predict_every == 0 {
            if let Some(plan) = &swarm.global_best_trajectory {
                predictions = predictor.predict(observations, plan)?;
                obstacles =
                    ObstacleField::new(&predictions.tracks(), problem.other_geoms, horizon)?;
            }
        }
        let before_best = swarm.global_best_cost;
        step_swarm(
            &mut swarm,
            problem,
            &obstacles,
            inertia_at(config, iteration),
            config,
            &mut rng,
        );
        if swarm.global_best_cost < before_best {
            best_predictions = predictions.clone();
        }
        completed += 1;
        if let Some(sink) = trace.as_deref_mut() {
            sink.push(IterationTrace {
                iteration,
                particle_costs: swarm
                    .particles
                    .iter()
                    .map(|p| p.last_breakdown.total)
                    .collect(),
                global_best: swarm.global_best_cost,
                best_breakdown: swarm.global_best_breakdown,
            });
        }
    }

    // A usable global best exists unless every evaluation failed; fall back
    // to re-rolling the first particle in that degenerate case.
    let (steering, breakdown, trajectory) = match swarm.global_best_trajectory {
        Some(traj) => (
            swarm.global_best_position,
            swarm.global_best_breakdown,
            traj,
        ),
        None => {
            let position = swarm.particles[0].position.clone();
            let controls = problem.controls(&position);
            let traj = rollout(&problem.initial_state, &controls, &problem.ego_geom, problem.dt)?;
            (position, CostBreakdown::unusable(), traj)
        }
    };

    let mut diagnostic = None;
    let mut feasible = breakdown.is_collision_free() && !breakdown.lane_violation;
    if completed == 0 {
        feasible = false;
        diagnostic = Some("time budget exhausted before the first iteration".to_owned());
    }

    Ok(SwarmResult {
        steering,
        trajectory,
        breakdown,
        predictions: best_predictions,
        iterations: completed,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        feasible,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{LaneContext, Waypoint};
    use crate::geometry::LaneLayout;
    use crate::prediction::ConstantVelocityPredictor;
    use approx::assert_abs_diff_eq;

    const DT: f64 = 0.1;

    fn reference(n: usize) -> Reference {
        let points = (1..=n)
            .map(|i| Waypoint::new(i as f64, 1.75, 10.0))
            .collect();
        Reference::from_waypoints(
            points,
            LaneContext::new(&LaneLayout::default(), 0),
            &VehicleGeometry::default(),
            DT,
        )
        .unwrap()
    }

    fn problem(reference: &Reference) -> SwarmProblem<'_> {
        SwarmProblem {
            reference,
            initial_state: VehicleState::new(0.0, 1.75, 0.0, 10.0),
            ego_geom: VehicleGeometry::default(),
            other_geoms: &[],
            safety: SafetySpec::new(2.0),
            weights: CostWeights::default(),
            bounds: ControlBounds::default(),
            dt: DT,
        }
    }

    fn empty_observations() -> ObservationMatrix {
        ObservationMatrix::new(vec![Vec::new(); 8]).unwrap()
    }

    #[test]
    fn zero_range_starts_all_particles_at_the_reference() {
        let reference = reference(10);
        let config = SwarmConfig {
            particle_count: 3,
            init_position_range: 0.0,
            init_velocity_range: 0.0,
            ..SwarmConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let swarm = initialize_swarm(&reference, &config, &ControlBounds::default(), &mut rng);
        for p in &swarm.particles {
            assert_eq!(p.position, reference.steering);
            assert!(p.velocity.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn fixed_seed_reproduces_the_swarm() {
        let reference = reference(10);
        let config = SwarmConfig::default();
        let mut a_rng = ChaCha8Rng::seed_from_u64(7);
        let mut b_rng = ChaCha8Rng::seed_from_u64(7);
        let a = initialize_swarm(&reference, &config, &ControlBounds::default(), &mut a_rng);
        let b = initialize_swarm(&reference, &config, &ControlBounds::default(), &mut b_rng);
        for (pa, pb) in a.particles.iter().zip(&b.particles) {
            assert_eq!(pa.position, pb.position);
            assert_eq!(pa.velocity, pb.velocity);
        }
    }

    #[test]
    fn initial_particles_distinct_and_clamped_across_seeds() {
        let reference = reference(10);
        let config = SwarmConfig {
            particle_count: 2,
            ..SwarmConfig::default()
        };
        let bounds = ControlBounds::default();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let swarm = initialize_swarm(&reference, &config, &bounds, &mut rng);
            assert_ne!(swarm.particles[0].position, swarm.particles[1].position);
            for p in &swarm.particles {
                assert!(p.position.iter().all(|d| d.abs() <= bounds.delta_max));
            }
        }
    }

    fn particle_at(position: Vec<f64>, velocity: Vec<f64>, best: Vec<f64>) -> Particle {
        Particle {
            position,
            velocity,
            best_position: best,
            best_cost: 1.0,
            last_breakdown: CostBreakdown {
                f_col: 0.0,
                ..CostBreakdown::unusable()
            },
        }
    }

    #[test]
    fn velocity_vanishes_at_both_bests_with_zero_inertia() {
        let p = particle_at(vec![0.2], vec![0.4], vec![0.2]);
        let config = SwarmConfig::default();
        let v = update_velocity(
            &p,
            &[0.2],
            0.0,
            &config,
            &RandomDraws::Scalar { r1: 0.9, r2: 0.3 },
        );
        assert_eq!(v, vec![0.0]);
    }

    #[test]
    fn pure_inertia_preserves_velocity() {
        let p = particle_at(vec![0.1], vec![0.07], vec![0.1]);
        let config = SwarmConfig {
            c1: 0.0,
            c2: 0.0,
            ..SwarmConfig::default()
        };
        let v = update_velocity(
            &p,
            &[0.1],
            1.0,
            &config,
            &RandomDraws::Scalar { r1: 0.5, r2: 0.5 },
        );
        assert_eq!(v, vec![0.07]);
    }

    #[test]
    fn velocity_update_matches_scalar_oracle() {
        // w=0.5, c1=c2=2, r1=r2=0.5, v=0.05, p=0.1, lb=0.2, gb=0.3
        // -> 0.5*0.05 + 1.0*(0.1) + 1.0*(0.2) = 0.325
        let p = particle_at(vec![0.1], vec![0.05], vec![0.2]);
        let config = SwarmConfig {
            c1: 2.0,
            c2: 2.0,
            ..SwarmConfig::default()
        };
        let v = update_velocity(
            &p,
            &[0.3],
            0.5,
            &config,
            &RandomDraws::Scalar { r1: 0.5, r2: 0.5 },
        );
        assert_abs_diff_eq!(v[0], 0.325, epsilon = 1e-15);
    }

    #[test]
    fn collision_boost_scales_the_whole_update() {
        let mut p = particle_at(vec![0.1], vec![0.05], vec![0.2]);
        p.last_breakdown.f_col = 1e6;
        let config = SwarmConfig {
            c1: 2.0,
            c2: 2.0,
            collision_boost: 2.0,
            ..SwarmConfig::default()
        };
        let v = update_velocity(
            &p,
            &[0.3],
            0.5,
            &config,
            &RandomDraws::Scalar { r1: 0.5, r2: 0.5 },
        );
        assert_abs_diff_eq!(v[0], 0.65, epsilon = 1e-15);
    }

    #[test]
    fn stationary_swarm_is_a_fixpoint() {
        // Zero inertia, particle exactly at both bests, zero velocity: the
        // swarm must not move.
        let reference = reference(10);
        let problem = problem(&reference);
        let config = SwarmConfig {
            particle_count: 1,
            init_position_range: 0.0,
            init_velocity_range: 0.0,
            ..SwarmConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut swarm = initialize_swarm(&reference, &config, &problem.bounds, &mut rng);
        let obstacles = ObstacleField::new(&[], &[], 10).unwrap();

        let (b, _) = problem.evaluate_candidate(&swarm.particles[0].position, &obstacles);
        swarm.particles[0].last_breakdown = b;
        swarm.particles[0].best_cost = b.total;
        swarm.global_best_cost = b.total;
        swarm.global_best_position = swarm.particles[0].position.clone();

        let before = swarm.particles[0].position.clone();
        step_swarm(&mut swarm, &problem, &obstacles, 0.0, &config, &mut rng);
        assert_eq!(swarm.particles[0].position, before);
    }

    #[test]
    fn strictly_better_particle_takes_the_global_best() {
        let reference = reference(10);
        let problem = problem(&reference);
        let obstacles = ObstacleField::new(&[], &[], 10).unwrap();

        let mut swarm = Swarm {
            particles: vec![
                particle_at(vec![0.2; 10], vec![0.0; 10], vec![0.2; 10]),
                particle_at(reference.steering.clone(), vec![0.0; 10], reference.steering.clone()),
            ],
            global_best_position: vec![0.2; 10],
            global_best_cost: f64::INFINITY,
            global_best_breakdown: CostBreakdown::unusable(),
            global_best_trajectory: None,
        };
        for p in swarm.particles.iter_mut() {
            p.best_cost = f64::INFINITY;
        }
        let config = SwarmConfig {
            particle_count: 2,
            c1: 0.0,
            c2: 0.0,
            ..SwarmConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        step_swarm(&mut swarm, &problem, &obstacles, 0.0, &config, &mut rng);
        // The reference-tracking particle is strictly better and must own
        // the global best.
        assert_eq!(swarm.global_best_position, reference.steering);
    }

    #[test]
    fn single_particle_single_iteration_returns_that_particle() {
        let reference = reference(10);
        let problem = problem(&reference);
        let config = SwarmConfig {
            particle_count: 1,
            iterations: 1,
            time_budget_ms: None,
            seed: 11,
            ..SwarmConfig::default()
        };
        let result = run(
            &problem,
            &ConstantVelocityPredictor::new(12),
            &empty_observations(),
            PredictionMatrix::empty(12),
            &config,
            None,
        )
        .unwrap();
        assert_eq!(result.iterations, 1);
        assert_eq!(result.trajectory.states.len(), 11);
        // The result re-evaluates to its own breakdown exactly.
        let obstacles = ObstacleField::new(&result.predictions.tracks(), problem.other_geoms, 10).unwrap();
        let (again, _) = problem.evaluate_candidate(&result.steering, &obstacles);
        assert_eq!(again, result.breakdown);
    }

    #[test]
    fn global_best_cost_is_monotone_and_reproducible() {
        let reference = reference(20);
        let problem = problem(&reference);
        let config = SwarmConfig {
            particle_count: 2,
            iterations: 30,
            time_budget_ms: None,
            seed: 123,
            ..SwarmConfig::default()
        };
        let mut trace = Vec::new();
        let result = run(
            &problem,
            &ConstantVelocityPredictor::new(12),
            &empty_observations(),
            PredictionMatrix::empty(12),
            &config,
            Some(&mut trace),
        )
        .unwrap();
        assert_eq!(trace.len(), 30);
        for w in trace.windows(2) {
            assert!(w[1].global_best <= w[0].global_best);
        }
        for t in &trace {
            assert!(t.particle_costs.len() == 2);
            // Every traced best is at least as large as the final best.
            assert!(t.global_best >= result.breakdown.total);
        }
        assert_eq!(trace.last().unwrap().global_best, result.breakdown.total);

        let again = run(
            &problem,
            &ConstantVelocityPredictor::new(12),
            &empty_observations(),
            PredictionMatrix::empty(12),
            &config,
            None,
        )
        .unwrap();
        assert_eq!(again.steering, result.steering);
        assert_eq!(again.breakdown, result.breakdown);
        assert_eq!(again.iterations, result.iterations);
    }

    #[test]
    fn result_tracks_reference_when_reference_is_free() {
        // With no traffic the reference itself is collision-free: the swarm
        // must end at least as close to it as its best initial sample.
        let reference = reference(20);
        let problem = problem(&reference);
        let config = SwarmConfig {
            particle_count: 2,
            iterations: 40,
            time_budget_ms: None,
            seed: 9,
            ..SwarmConfig::default()
        };

        // Best initial particle's reference deviation, reproduced via the
        // same deterministic initialization.
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let swarm = initialize_swarm(&reference, &config, &problem.bounds, &mut rng);
        let obstacles = ObstacleField::new(&[], &[], 20).unwrap();
        let best_initial_f_ref = swarm
            .particles
            .iter()
            .map(|p| problem.evaluate_candidate(&p.position, &obstacles).0)
            .map(|b| b.f_ref)
            .fold(f64::INFINITY, f64::min);

        let result = run(
            &problem,
            &ConstantVelocityPredictor::new(12),
            &empty_observations(),
            PredictionMatrix::empty(12),
            &config,
            None,
        )
        .unwrap();
        assert!(result.feasible);
        assert!(
            result.breakdown.f_ref <= best_initial_f_ref,
            "{} > {}",
            result.breakdown.f_ref,
            best_initial_f_ref
        );
    }

    #[test]
    fn positions_never_exceed_the_steering_bound() {
        let reference = reference(15);
        let problem = problem(&reference);
        let config = SwarmConfig {
            particle_count: 3,
            iterations: 25,
            init_position_range: 0.6,
            init_velocity_range: 0.3,
            time_budget_ms: None,
            seed: 21,
            ..SwarmConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut swarm = initialize_swarm(&reference, &config, &problem.bounds, &mut rng);
        let obstacles = ObstacleField::new(&[], &[], 15).unwrap();
        for iter in 0..config.iterations {
            step_swarm(
                &mut swarm,
                &problem,
                &obstacles,
                inertia_at(&config, iter),
                &config,
                &mut rng,
            );
            for p in &swarm.particles {
                assert!(p.position.iter().all(|d| d.abs() <= problem.bounds.delta_max));
            }
        }
    }

    #[test]
    fn local_best_dominance_holds_each_iteration() {
        let reference = reference(12);
        let problem = problem(&reference);
        let config = SwarmConfig {
            particle_count: 3,
            iterations: 15,
            time_budget_ms: None,
            seed: 2,
            ..SwarmConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut swarm = initialize_swarm(&reference, &config, &problem.bounds, &mut rng);
        let obstacles = ObstacleField::new(&[], &[], 12).unwrap();
        for i in 0..swarm.particles.len() {
            let (b, t) = problem.evaluate_candidate(&swarm.particles[i].position, &obstacles);
            swarm.particles[i].last_breakdown = b;
            swarm.particles[i].best_cost = b.total;
            if b.total < swarm.global_best_cost {
                swarm.global_best_cost = b.total;
                swarm.global_best_position.clone_from(&swarm.particles[i].position);
                swarm.global_best_breakdown = b;
                swarm.global_best_trajectory = t;
            }
        }
        for iter in 0..config.iterations {
            step_swarm(
                &mut swarm,
                &problem,
                &obstacles,
                inertia_at(&config, iter),
                &config,
                &mut rng,
            );
            for p in &swarm.particles {
                assert!(swarm.global_best_cost <= p.best_cost);
                assert!(p.best_cost <= p.last_breakdown.total);
            }
        }
    }
}
