#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsn_sched::instance::{Area, Phenomenon, ScenarioConfig};
use wsn_sched::{build_arcs, build_model, gen_random, Instance};

pub const ORACLE_CAP: usize = 40;

/// A small random instance: 2-3 sensors, 1-4 demand points, one or two
/// periods and one or two phenomena with short radii, so that most draws
/// stay under the oracle cap. Some draws get a battery that only lasts one
/// period, a nonzero activation penalty, or an uncovered penalty barely
/// above the largest per-period draw.
pub fn tiny_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n_sensors = rng.gen_range(2..=3);
    let n_dps = rng.gen_range(1..=4);
    let periods = rng.gen_range(1..=2);
    let mut phenomena = vec![Phenomenon::new(1, rng.gen_range(2.5..5.0), 2.0, 16)];
    if rng.gen_bool(0.2) {
        phenomena.push(Phenomenon::new(2, rng.gen_range(2.5..5.0), 1.0, 16));
    }
    let mut cfg = ScenarioConfig {
        phenomena,
        comm_radius_m: rng.gen_range(3.0..7.0),
        periods,
        activation_penalty: if rng.gen_bool(0.3) { 0.5 } else { 0.0 },
        ..ScenarioConfig::paper()
    };
    if rng.gen_bool(0.3) {
        cfg.device.battery_capacity = 1.5;
    }
    let cheap_penalty = rng.gen_bool(0.3).then(|| rng.gen_range(1.05..2.0));
    let mut inst = gen_random(n_sensors, n_dps, Area::new(10.0, 10.0), seed, &cfg).expect("valid tiny instance");
    if let Some(factor) = cheap_penalty {
        let eh = factor * inst.max_period_draw(&build_arcs(&inst));
        inst.penalties.uncovered = vec![eh; inst.n_phenomena()];
        inst.validate().expect("penalty above the largest draw");
    }
    inst
}

pub fn binaries(inst: &Instance) -> usize {
    build_model(inst, &build_arcs(inst)).unwrap().n_binaries()
}

/// The first `count` tiny instances (by seed) whose model has at most
/// `ORACLE_CAP` binaries.
pub fn tiny_instances(count: usize) -> Vec<Instance> {
    (0u64..)
        .map(tiny_instance)
        .filter(|inst| binaries(inst) <= ORACLE_CAP)
        .take(count)
        .collect()
}

/// One sensor in the middle of a 10 m field, one demand point 1 m away and
/// a sink 4 m away; one phenomenon, one period, no activation penalty.
pub fn trivial_instance() -> Instance {
    use wsn_sched::instance::{Point2D, SinkLayout};
    let cfg = ScenarioConfig {
        phenomena: vec![Phenomenon::new(1, 3.0, 2.0, 16)],
        sinks: SinkLayout::Coords(vec![Point2D::new(5.0, 9.0)]),
        activation_penalty: 0.0,
        ..ScenarioConfig::paper()
    };
    let mut inst = wsn_sched::gen_grid(1, 1, 1, 1, Area::new(10.0, 10.0), &cfg).unwrap();
    inst.demand_points[0].position = Point2D::new(6.0, 5.0);
    inst
}

/// Exact relative comparison with an absolute floor of one.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
