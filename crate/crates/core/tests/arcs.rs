use std::collections::BTreeSet;

use proptest::prelude::*;
use wsn_sched::instance::{Area, Phenomenon, Point2D, ScenarioConfig, SinkLayout};
use wsn_sched::{build_arcs, gen_random, paper_scenario, Instance};

fn within(a: &Point2D, b: &Point2D, r: f64) -> bool {
    let (dx, dy) = (a.x - b.x, a.y - b.y);
    dx * dx + dy * dy <= r * r
}

/// Pairs within range, found by testing every pair without sharing code with
/// the arc builder.
fn reference(inst: &Instance) -> (Vec<BTreeSet<(usize, usize)>>, BTreeSet<(usize, usize)>, BTreeSet<(usize, usize)>) {
    let cov = inst
        .phenomena
        .iter()
        .map(|p| {
            let mut s = BTreeSet::new();
            for (i, a) in inst.sensors.iter().enumerate() {
                for (j, d) in inst.demand_points.iter().enumerate() {
                    if within(a, &d.position, p.coverage_radius) {
                        s.insert((i, j));
                    }
                }
            }
            s
        })
        .collect();
    let mut comm = BTreeSet::new();
    let mut sink = BTreeSet::new();
    for (i, a) in inst.sensors.iter().enumerate() {
        for (j, b) in inst.sensors.iter().enumerate() {
            if i != j && within(a, b, inst.comm_radius_m) {
                comm.insert((i, j));
            }
        }
        for (m, b) in inst.sinks.iter().enumerate() {
            if within(a, b, inst.comm_radius_m) {
                sink.insert((i, m));
            }
        }
    }
    (cov, comm, sink)
}

fn set(v: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    v.iter().copied().collect()
}

fn config(r1: f64, r2: f64, comm: f64, corners: bool) -> ScenarioConfig {
    ScenarioConfig {
        phenomena: vec![Phenomenon::new(1, r1, 2.0, 16), Phenomenon::new(2, r2, 1.0, 16)],
        comm_radius_m: comm,
        sinks: if corners { SinkLayout::Corners } else { SinkLayout::Center },
        ..ScenarioConfig::paper()
    }
}

#[test]
fn scenario_grid_arc_counts() {
    let inst = paper_scenario(1, 1).unwrap();
    let arcs = build_arcs(&inst);
    // sensors sit at 1.25..8.75 m, so the widest pair is 7.5 * sqrt(2) < 11 m apart
    assert_eq!(arcs.comm.len(), 16 * 15);
    assert_eq!(arcs.to_sink.len(), 16);
    assert_eq!(arcs.coverage[1].len(), 1600);
    let (cov, _, _) = reference(&inst);
    assert_eq!(set(&arcs.coverage[0]), cov[0]);
}

#[test]
fn routing_scenario_needs_relays() {
    let inst = paper_scenario(2, 1).unwrap();
    let arcs = build_arcs(&inst);
    assert_eq!(inst.sinks.len(), 4);
    let direct: BTreeSet<usize> = arcs.to_sink.iter().map(|&(i, _)| i).collect();
    assert!(direct.len() < inst.n_sensors());
}

proptest! {
    #[test]
    fn arcs_match_pairwise_distances(
        seed in any::<u64>(),
        n in 1usize..15,
        nd in 1usize..25,
        r1 in 0.5f64..20.0,
        r2 in 0.5f64..20.0,
        comm in 0.5f64..20.0,
        corners in any::<bool>(),
    ) {
        let inst = gen_random(n, nd, Area::new(20.0, 15.0), seed, &config(r1, r2, comm, corners)).unwrap();
        let arcs = build_arcs(&inst);
        let (cov, c, s) = reference(&inst);
        prop_assert_eq!(set(&arcs.coverage[0]), cov[0].clone());
        prop_assert_eq!(set(&arcs.coverage[1]), cov[1].clone());
        prop_assert_eq!(set(&arcs.comm), c);
        prop_assert_eq!(set(&arcs.to_sink), s);
        prop_assert!(arcs.comm.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn larger_radii_only_add_arcs(
        seed in any::<u64>(),
        r in 0.5f64..10.0,
        grow in 0.0f64..10.0,
        comm in 0.5f64..10.0,
    ) {
        let small = gen_random(8, 12, Area::new(15.0, 15.0), seed, &config(r, r, comm, false)).unwrap();
        let mut big = small.clone();
        for p in &mut big.phenomena {
            p.coverage_radius += grow;
        }
        big.comm_radius_m += grow;
        let (a, b) = (build_arcs(&small), build_arcs(&big));
        prop_assert!(set(&a.coverage[0]).is_subset(&set(&b.coverage[0])));
        prop_assert!(set(&a.comm).is_subset(&set(&b.comm)));
        prop_assert!(set(&a.to_sink).is_subset(&set(&b.to_sink)));
    }
}
