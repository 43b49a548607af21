//! Period-by-period greedy schedule.
//!
//! For each period and phenomenon, sensors are picked by weighted set cover
//! (marginal energy per newly covered demand point, counting node activation,
//! the activation penalty and the cheapest battery-feasible route to a sink).
//! Routes may switch on relay nodes. Demand points that no affordable sensor
//! can serve for less than their penalty stay uncovered.

use std::cmp::Ordering;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{assemble, check_arcs, Provenance, Route, Solution, SolveConfig, SolveError, ENERGY_TOL};
use crate::instance::{ArcSets, Instance};
use crate::network::{Network, Node};

struct PeriodState<'n, 'a> {
    net: &'n Network<'a>,
    /// Battery left at the start of the period.
    residual: Vec<f64>,
    /// Energy committed during the period.
    spent: Vec<f64>,
    on: Vec<bool>,
    was_on: Vec<bool>,
}

impl PeriodState<'_, '_> {
    fn switch_on_cost(&self, i: usize) -> f64 {
        if self.on[i] {
            0.0
        } else if self.was_on[i] {
            self.net.maintenance()
        } else {
            self.net.maintenance() + self.net.activation()
        }
    }

    fn affords(&self, i: usize, extra: f64) -> bool {
        self.spent[i] + extra <= self.residual[i] + ENERGY_TOL
    }

    /// Cheapest battery-feasible path from `source` to a sink. Node costs of
    /// relays that must be switched on are folded into the arc entering them.
    fn cheapest_route(&self, source: usize, g: usize) -> Option<(f64, Vec<usize>)> {
        let net = self.net;
        let n = net.n_sensors();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut best: Option<(f64, usize)> = None;
        dist[source] = self.switch_on_cost(source);
        loop {
            let Some(u) = (0..n)
                .filter(|&k| !done[k] && dist[k].is_finite())
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
            else {
                break;
            };
            done[u] = true;
            let base = if u == source {
                self.switch_on_cost(u)
            } else {
                self.switch_on_cost(u) + net.receive[g]
            };
            for &a in &net.out_arcs[u] {
                let tx = net.transmit[g][a];
                if !self.affords(u, base + tx) {
                    continue;
                }
                match net.arcs[a].to {
                    Node::Sink(_) => {
                        let d = dist[u] + tx;
                        if best.is_none_or(|(c, _)| d < c) {
                            best = Some((d, a));
                        }
                    }
                    Node::Sensor(v) if v != source && !done[v] => {
                        let d = dist[u] + tx + net.receive[g] + self.switch_on_cost(v);
                        if d < dist[v] {
                            dist[v] = d;
                            pred[v] = Some(a);
                        }
                    }
                    Node::Sensor(_) => {}
                }
            }
        }
        let (cost, last) = best?;
        let mut path = vec![last];
        let mut node = net.arcs[last].from;
        while let Some(a) = pred[node] {
            path.push(a);
            node = net.arcs[a].from;
        }
        path.reverse();
        Some((cost, path))
    }

    fn switch_on(&mut self, i: usize) {
        if !self.on[i] {
            self.spent[i] += self.switch_on_cost(i);
            self.on[i] = true;
        }
    }

    fn commit_route(&mut self, source: usize, g: usize, path: &[usize]) {
        self.switch_on(source);
        for &a in path {
            let arc = self.net.arcs[a];
            self.spent[arc.from] += self.net.transmit[g][a];
            if let Node::Sensor(j) = arc.to {
                self.switch_on(j);
                self.spent[j] += self.net.receive[g];
            }
        }
    }
}

struct Candidate {
    sensor: usize,
    ratio: f64,
    residual: f64,
    rank: usize,
    path: Vec<usize>,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        let scale = self.ratio.abs().max(other.ratio.abs()).max(1e-300);
        if (self.ratio - other.ratio).abs() > 1e-12 * scale {
            return self.ratio < other.ratio;
        }
        other
            .residual
            .total_cmp(&self.residual)
            .then(self.rank.cmp(&other.rank))
            == Ordering::Less
    }
}

pub fn solve_heuristic(
    instance: &Instance,
    arcs: &ArcSets,
    config: &SolveConfig,
) -> Result<Solution, SolveError> {
    check_arcs(instance, arcs)?;
    let started = Instant::now();
    let net = Network::new(instance, arcs);
    let (n, periods, ng) = (net.n_sensors(), net.periods(), net.n_phenomena());
    let nd = instance.n_demand_points();

    let mut order: Vec<usize> = (0..n).collect();
    if config.seed != 0 {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    }
    let mut rank = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        rank[i] = k;
    }

    let mut consumed = vec![0.0; n];
    let mut was_on = vec![false; n];
    let mut sensing = Vec::new();
    let mut routes: Vec<Route> = Vec::new();

    for t in 0..periods {
        let mut state = PeriodState {
            net: &net,
            residual: consumed
                .iter()
                .map(|c| instance.device.battery_capacity - c)
                .collect(),
            spent: vec![0.0; n],
            on: vec![false; n],
            was_on: was_on.clone(),
        };
        for g in 0..ng {
            let eh = instance.penalties.uncovered[g];
            let eg = instance.penalties.activation[g];
            let mut open: Vec<bool> = (0..nd).map(|j| instance.demands(j, g)).collect();
            let mut chosen = vec![false; n];
            loop {
                let mut best: Option<Candidate> = None;
                for &i in &order {
                    if chosen[i] {
                        continue;
                    }
                    let gain = net.covers[g][i].iter().filter(|&&j| open[j]).count();
                    if gain == 0 {
                        continue;
                    }
                    let Some((route_cost, path)) = state.cheapest_route(i, g) else {
                        continue;
                    };
                    let cost = eg + route_cost;
                    if cost >= eh * gain as f64 {
                        continue;
                    }
                    let cand = Candidate {
                        sensor: i,
                        ratio: cost / gain as f64,
                        residual: state.residual[i] - state.spent[i],
                        rank: rank[i],
                        path,
                    };
                    if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                        best = Some(cand);
                    }
                }
                let Some(c) = best else { break };
                state.commit_route(c.sensor, g, &c.path);
                chosen[c.sensor] = true;
                for &j in &net.covers[g][c.sensor] {
                    open[j] = false;
                }
                sensing.push((c.sensor, t, g));
                routes.push(((c.sensor, t, g), c.path));
            }
        }
        for i in 0..n {
            consumed[i] += state.spent[i];
        }
        was_on = state.on;
    }

    let mut sol = assemble(&net, &sensing, &routes, Provenance::Heuristic);
    sol.wall_time_s = started.elapsed().as_secs_f64();
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{build_arcs, paper_scenario};
    use crate::model::VarRef;

    #[test]
    fn scenario_grid_single_period_is_fully_covered() {
        let inst = paper_scenario(1, 1).unwrap();
        let sol = solve_heuristic(&inst, &build_arcs(&inst), &SolveConfig::default()).unwrap();
        assert!(!sol.ones.iter().any(|v| matches!(v, VarRef::H { .. })));
    }

    #[test]
    fn empty_batteries_leave_everything_uncovered() {
        let mut inst = paper_scenario(1, 2).unwrap();
        inst.device.battery_capacity = 0.0;
        let sol = solve_heuristic(&inst, &build_arcs(&inst), &SolveConfig::default()).unwrap();
        assert!(sol.ones.iter().all(|v| matches!(v, VarRef::H { .. })));
        assert_eq!(sol.ones.len(), inst.demanded_triples());
        assert!(sol.energy.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn deterministic_for_equal_seed() {
        let inst = paper_scenario(2, 3).unwrap();
        let arcs = build_arcs(&inst);
        let cfg = SolveConfig { seed: 11, ..SolveConfig::default() };
        let a = solve_heuristic(&inst, &arcs, &cfg).unwrap();
        let b = solve_heuristic(&inst, &arcs, &cfg).unwrap();
        assert!(a.same_assignment(&b, 0.0));
    }
}
