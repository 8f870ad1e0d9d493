use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use lanechange_core::geometry::{min_clearance, Footprint, Point};
use lanechange_core::harness::{plan_once, Method, ScenarioConfig};
use lanechange_core::kinematics::{rollout, ControlInput, VehicleGeometry, VehicleState};
use lanechange_core::pairwise_distance;
use lanechange_core::prediction::ObservationMatrix;

fn bench_kinematics(c: &mut Criterion) {
    let geom = VehicleGeometry::passenger_car();
    let initial = VehicleState::new(0.0, 5.25, 0.0, 10.0);
    let controls: Vec<ControlInput> = (0..30)
        .map(|i| ControlInput::new(0.002 * ((i as f64) * 0.3).sin(), 0.0))
        .collect();
    c.bench_function("rollout_30_steps", |b| {
        b.iter(|| rollout(black_box(&initial), black_box(&controls), &geom, 0.1).unwrap())
    });
}

fn bench_distance(c: &mut Criterion) {
    let geom = VehicleGeometry::passenger_car();
    let a = Footprint::new(Point::new(0.0, 5.25), 0.05, &geom);
    let bfp = Footprint::new(Point::new(7.0, 1.75), -0.02, &geom);
    c.bench_function("pairwise_distance", |b| {
        b.iter(|| pairwise_distance(black_box(&a), black_box(&bfp)))
    });

    let initial = VehicleState::new(0.0, 5.25, 0.0, 10.0);
    let controls = vec![ControlInput::coast(); 30];
    let traj = rollout(&initial, &controls, &geom, 0.1).unwrap();
    let tracks: Vec<Vec<Point>> = (0..2)
        .map(|v| {
            (1..=30)
                .map(|k| Point::new(v as f64 * 20.0 + k as f64 * 0.8, 1.75))
                .collect()
        })
        .collect();
    let geoms = vec![geom; 2];
    c.bench_function("min_clearance_30x2", |b| {
        b.iter(|| min_clearance(black_box(&traj), &tracks, &geoms, &geom).unwrap())
    });
}

fn bench_prediction(c: &mut Criterion) {
    let config = ScenarioConfig::default();
    let scenario = lanechange_core::harness::build_scenario(&config, 3).unwrap();
    let obs: ObservationMatrix = scenario.observations().unwrap();
    let predictor = scenario.predictor().unwrap();
    let request = scenario.plan_request().unwrap();
    let reference = lanechange_core::planner::initial_plan(&request).unwrap();
    let plan = reference.to_trajectory(request.current, request.dt);
    c.bench_function("idm_predict_30x2", |b| {
        b.iter(|| predictor.predict(black_box(&obs), black_box(&plan)).unwrap())
    });
}

fn bench_plans(c: &mut Criterion) {
    let config = ScenarioConfig::default();
    c.bench_function("plan_pso_nominal", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed = seed.wrapping_add(1);
            plan_once(black_box(&config), seed, Method::Pso, None, None).unwrap()
        })
    });
    c.bench_function("plan_mc_nominal", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed = seed.wrapping_add(1);
            plan_once(black_box(&config), seed, Method::Mc, None, None).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_kinematics,
    bench_distance,
    bench_prediction,
    bench_plans
);
criterion_main!(benches);
