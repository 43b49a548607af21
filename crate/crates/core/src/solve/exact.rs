//! Depth-first branch and bound for small instances.
//!
//! The search first fixes the sensing variables r in model order. Coverage x
//! then follows (a sensing node covers every point it can) together with the
//! penalties h. For every complete sensing pattern a second search picks one
//! simple route per sensing commodity; on/off and activation variables follow
//! from the routes, and energies are tight.
//!
//! Bounds: committed penalties and sensing costs, node maintenance and one
//! activation per used sensor, the cheapest route of every sensing commodity,
//! and for each point not yet covered the smaller of its penalty and the
//! cheapest per-point share of a still undecided sensor that could cover it.

use std::time::Instant;

use super::{
    assemble, check_arcs, min_route_cost, objective_value, solve_heuristic, Provenance, Route,
    Solution, SolveConfig, SolveError, ENERGY_TOL,
};
use crate::instance::{ArcSets, Instance};
use crate::model::{build_model, IlpModel};
use crate::network::{Network, Node};

/// Simple paths kept per (source, phenomenon); beyond this the routing search
/// is no longer exhaustive and the result is not certified.
const PATH_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOutcome {
    pub solution: Solution,
    /// Set when the search finished within its limits, so the solution is optimal.
    pub certified: bool,
    pub nodes: u64,
}

struct SenseVar {
    sensor: usize,
    period: usize,
    phen: usize,
    /// EG plus the cheapest route to a sink.
    cost: f64,
    /// Cheapest transmission out of the sensor.
    min_tx: f64,
}

struct Path {
    arcs: Vec<usize>,
    hop_cost: f64,
}

struct Search<'n, 'a> {
    net: &'n Network<'a>,
    config: &'n SolveConfig,
    started: Instant,
    vars: Vec<SenseVar>,
    /// var index of (t, g, i), if the sensor is a source for g.
    var_of: Vec<Vec<Vec<Option<usize>>>>,
    paths: Vec<Vec<Option<Vec<Path>>>>,
    min_route: Vec<Vec<f64>>,
    truncated: bool,
    aborted: bool,
    nodes: u64,
    best: f64,
    best_solution: Option<Solution>,

    // sensing state
    chosen: Vec<bool>,
    cover_count: Vec<Vec<Vec<u32>>>,
    sensing_at: Vec<Vec<u32>>,
    committed: f64,

    // routing state
    on_count: Vec<Vec<u32>>,
    route_energy: Vec<f64>,
    hop_total: f64,
    picked: Vec<usize>,
}

impl<'n, 'a> Search<'n, 'a> {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        let out_of_time = self.nodes.is_multiple_of(256)
            && self.started.elapsed().as_secs_f64() >= self.config.time_limit_s;
        if self.nodes >= self.config.node_limit || out_of_time {
            self.aborted = true;
        }
        !self.aborted
    }

    fn cutoff(&self) -> f64 {
        if !self.best.is_finite() {
            return f64::INFINITY;
        }
        let eps = 1e-9 * self.best.abs().max(1.0);
        self.best - eps.max(self.config.optimality_gap * self.best.abs())
    }

    fn penalty(&self, g: usize) -> f64 {
        self.net.instance.penalties.uncovered[g]
    }

    fn node_costs(&self, on: &[Vec<u32>]) -> f64 {
        let mut total = 0.0;
        for row in on {
            let periods = row.iter().filter(|&&c| c > 0).count();
            if periods > 0 {
                total += self.net.maintenance() * periods as f64 + self.net.activation();
            }
        }
        total
    }

    fn sensing_bound(&self, depth: usize) -> f64 {
        let net = self.net;
        let inst = net.instance;
        let mut lb = self.committed + self.node_costs(&self.sensing_at);
        for t in 0..net.periods() {
            for g in 0..net.n_phenomena() {
                let eh = self.penalty(g);
                let open = &self.cover_count[t][g];
                for j in 0..inst.n_demand_points() {
                    if !inst.demands(j, g) || open[j] > 0 {
                        continue;
                    }
                    let mut share = eh;
                    for &i in &net.coverers[g][j] {
                        let Some(k) = self.var_of[t][g][i] else { continue };
                        if k < depth {
                            continue;
                        }
                        let gain = net.covers[g][i].iter().filter(|&&p| open[p] == 0).count();
                        share = share.min(self.vars[k].cost / gain as f64);
                    }
                    lb += share;
                }
            }
        }
        lb
    }

    fn battery_ok_sensing(&self, sensor: usize) -> bool {
        let periods = self.sensing_at[sensor].iter().filter(|&&c| c > 0).count();
        if periods == 0 {
            return true;
        }
        let mut need = self.net.maintenance() * periods as f64 + self.net.activation();
        for (k, v) in self.vars.iter().enumerate() {
            if v.sensor == sensor && self.chosen[k] {
                need += v.min_tx;
            }
        }
        need <= self.net.instance.device.battery_capacity + ENERGY_TOL
    }

    fn set_sensing(&mut self, k: usize, on: bool) {
        let (i, t, g) = (self.vars[k].sensor, self.vars[k].period, self.vars[k].phen);
        let delta: i64 = if on { 1 } else { -1 };
        self.chosen[k] = on;
        let sign = delta as f64;
        self.committed += sign * self.vars[k].cost;
        self.sensing_at[i][t] = (self.sensing_at[i][t] as i64 + delta) as u32;
        for &j in &self.net.covers[g][i] {
            let c = &mut self.cover_count[t][g][j];
            *c = (*c as i64 + delta) as u32;
        }
    }

    fn gain(&self, k: usize) -> usize {
        let v = &self.vars[k];
        self.net.covers[v.phen][v.sensor]
            .iter()
            .filter(|&&j| self.cover_count[v.period][v.phen][j] == 0)
            .count()
    }

    fn sensing(&mut self, depth: usize) {
        if self.aborted || !self.tick() {
            return;
        }
        if depth == self.vars.len() {
            self.start_routing();
            return;
        }
        let sensor = self.vars[depth].sensor;
        if self.vars[depth].cost.is_finite() && self.gain(depth) > 0 {
            self.set_sensing(depth, true);
            if self.battery_ok_sensing(sensor) && self.sensing_bound(depth + 1) < self.cutoff() {
                self.sensing(depth + 1);
            }
            self.set_sensing(depth, false);
        }
        if self.sensing_bound(depth + 1) < self.cutoff() {
            self.sensing(depth + 1);
        }
    }

    fn paths_for(&mut self, l: usize, g: usize) -> &Vec<Path> {
        if self.paths[l][g].is_none() {
            let (list, truncated) = enumerate_paths(self.net, l, g);
            self.truncated |= truncated;
            self.paths[l][g] = Some(list);
        }
        self.paths[l][g].as_ref().expect("filled above")
    }

    fn start_routing(&mut self) {
        let active: Vec<usize> = (0..self.vars.len()).filter(|&k| self.chosen[k]).collect();
        for &k in &active {
            let (l, g) = (self.vars[k].sensor, self.vars[k].phen);
            self.paths_for(l, g);
        }
        let uncovered: f64 = {
            let inst = self.net.instance;
            let mut total = 0.0;
            for t in 0..self.net.periods() {
                for g in 0..self.net.n_phenomena() {
                    for j in 0..inst.n_demand_points() {
                        if inst.demands(j, g) && self.cover_count[t][g][j] == 0 {
                            total += self.penalty(g);
                        }
                    }
                }
            }
            total
        };
        let fixed: f64 = active
            .iter()
            .map(|&k| self.net.instance.penalties.activation[self.vars[k].phen])
            .sum::<f64>()
            + uncovered;
        let remaining: f64 = active
            .iter()
            .map(|&k| self.min_route[self.vars[k].sensor][self.vars[k].phen])
            .sum();
        for row in self.on_count.iter_mut() {
            row.iter_mut().for_each(|c| *c = 0);
        }
        for &k in &active {
            self.on_count[self.vars[k].sensor][self.vars[k].period] += 1;
        }
        self.route_energy.iter_mut().for_each(|e| *e = 0.0);
        self.hop_total = 0.0;
        self.picked.clear();
        self.routing(&active, 0, fixed, remaining);
    }

    fn routing_battery_ok(&self, active: &[usize], from: usize) -> bool {
        let cap = self.net.instance.device.battery_capacity + ENERGY_TOL;
        for i in 0..self.net.n_sensors() {
            let periods = self.on_count[i].iter().filter(|&&c| c > 0).count();
            if periods == 0 {
                continue;
            }
            let mut need = self.net.maintenance() * periods as f64
                + self.net.activation()
                + self.route_energy[i];
            for &k in &active[from..] {
                if self.vars[k].sensor == i {
                    need += self.vars[k].min_tx;
                }
            }
            if need > cap {
                return false;
            }
        }
        true
    }

    fn apply_path(&mut self, t: usize, g: usize, path_arcs: &[usize], sign: f64) {
        let net = self.net;
        for &a in path_arcs {
            let arc = net.arcs[a];
            self.route_energy[arc.from] += sign * net.transmit[g][a];
            if let Node::Sensor(j) = arc.to {
                self.route_energy[j] += sign * net.receive[g];
                let c = &mut self.on_count[j][t];
                *c = if sign > 0.0 { *c + 1 } else { *c - 1 };
            }
        }
    }

    fn routing(&mut self, active: &[usize], pos: usize, fixed: f64, remaining: f64) {
        if self.aborted || !self.tick() {
            return;
        }
        if pos == active.len() {
            self.leaf(active);
            return;
        }
        let k = active[pos];
        let (l, t, g) = (self.vars[k].sensor, self.vars[k].period, self.vars[k].phen);
        let rest = remaining - self.min_route[l][g];
        let n_paths = self.paths[l][g].as_ref().map_or(0, Vec::len);
        for p in 0..n_paths {
            let (arcs, hop) = {
                let path = &self.paths[l][g].as_ref().expect("enumerated")[p];
                (path.arcs.clone(), path.hop_cost)
            };
            let base = fixed + self.node_costs(&self.on_count) + self.hop_total + rest;
            if base + hop >= self.cutoff() {
                break;
            }
            self.apply_path(t, g, &arcs, 1.0);
            self.hop_total += hop;
            let lb = fixed + self.node_costs(&self.on_count) + self.hop_total + rest;
            if lb < self.cutoff() && self.routing_battery_ok(active, pos + 1) {
                self.picked.push(p);
                self.routing(active, pos + 1, fixed, rest);
                self.picked.pop();
            }
            self.hop_total -= hop;
            self.apply_path(t, g, &arcs, -1.0);
            if self.aborted {
                return;
            }
        }
    }

    fn leaf(&mut self, active: &[usize]) {
        let net = self.net;
        let sensing: Vec<(usize, usize, usize)> = active
            .iter()
            .map(|&k| (self.vars[k].sensor, self.vars[k].period, self.vars[k].phen))
            .collect();
        let routes: Vec<Route> = active
            .iter()
            .zip(&self.picked)
            .map(|(&k, &p)| {
                let v = &self.vars[k];
                let path = &self.paths[v.sensor][v.phen].as_ref().expect("enumerated")[p];
                ((v.sensor, v.period, v.phen), path.arcs.clone())
            })
            .collect();
        let sol = assemble(net, &sensing, &routes, Provenance::Exact);
        let cap = net.instance.device.battery_capacity;
        if sol.energy.iter().any(|&e| e > cap + ENERGY_TOL) {
            return;
        }
        let obj = objective_value(net, &sol.ones, &sol.energy);
        let eps = 1e-9 * self.best.abs().max(1.0);
        if !self.best.is_finite() || obj < self.best - eps {
            self.best = obj;
            self.best_solution = Some(sol);
        }
    }
}

/// Simple paths from `l` to any sink that never re-enter `l`, cheapest first.
fn enumerate_paths(net: &Network, l: usize, g: usize) -> (Vec<Path>, bool) {
    fn walk(
        net: &Network,
        g: usize,
        u: usize,
        visited: &mut Vec<bool>,
        stack: &mut Vec<usize>,
        cost: f64,
        out: &mut Vec<Path>,
    ) -> bool {
        for &a in &net.out_arcs[u] {
            if out.len() >= PATH_CAP {
                return true;
            }
            let c = cost + net.hop_cost(g, a);
            match net.arcs[a].to {
                Node::Sink(_) => {
                    stack.push(a);
                    out.push(Path {
                        arcs: stack.clone(),
                        hop_cost: c,
                    });
                    stack.pop();
                }
                Node::Sensor(v) if !visited[v] => {
                    visited[v] = true;
                    stack.push(a);
                    let full = walk(net, g, v, visited, stack, c, out);
                    stack.pop();
                    visited[v] = false;
                    if full {
                        return true;
                    }
                }
                Node::Sensor(_) => {}
            }
        }
        false
    }
    let mut visited = vec![false; net.n_sensors()];
    visited[l] = true;
    let mut out = Vec::new();
    let truncated = walk(net, g, l, &mut visited, &mut Vec::new(), 0.0, &mut out);
    out.sort_by(|a, b| a.hop_cost.total_cmp(&b.hop_cost).then(a.arcs.cmp(&b.arcs)));
    (out, truncated)
}

/// Exact minimization of the model objective. `model` must be the model
/// built from `instance` and `arcs`; it fixes which sensing variables exist.
pub fn solve_exact(
    instance: &Instance,
    arcs: &ArcSets,
    model: &IlpModel,
    config: &SolveConfig,
) -> Result<ExactOutcome, SolveError> {
    check_arcs(instance, arcs)?;
    let started = Instant::now();
    let expected = build_model(instance, arcs).map_err(|e| SolveError::ModelMismatch(e.to_string()))?;
    if !model.structurally_eq(&expected) {
        return Err(SolveError::ModelMismatch(
            "model was not built from this instance".into(),
        ));
    }
    let net = Network::new(instance, arcs);
    let (n, periods, ng) = (net.n_sensors(), net.periods(), net.n_phenomena());

    let min_route: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..ng).map(|g| min_route_cost(&net, i, g)).collect())
        .collect();
    let mut vars = Vec::new();
    let mut var_of = vec![vec![vec![None; n]; ng]; periods];
    for t in 0..periods {
        for g in 0..ng {
            for &i in &net.sources[g] {
                var_of[t][g][i] = Some(vars.len());
                let min_tx = net.out_arcs[i]
                    .iter()
                    .map(|&a| net.transmit[g][a])
                    .fold(f64::INFINITY, f64::min);
                vars.push(SenseVar {
                    sensor: i,
                    period: t,
                    phen: g,
                    cost: instance.penalties.activation[g] + min_route[i][g],
                    min_tx,
                });
            }
        }
    }

    let incumbent = solve_heuristic(instance, arcs, config)?;
    let best = objective_value(&net, &incumbent.ones, &incumbent.energy);
    let n_vars = vars.len();
    let mut search = Search {
        net: &net,
        config,
        started,
        vars,
        var_of,
        paths: (0..n).map(|_| (0..ng).map(|_| None).collect()).collect(),
        min_route,
        truncated: false,
        aborted: false,
        nodes: 0,
        best,
        best_solution: None,
        chosen: vec![false; n_vars],
        cover_count: vec![vec![vec![0; instance.n_demand_points()]; ng]; periods],
        sensing_at: vec![vec![0; periods]; n],
        committed: 0.0,
        on_count: vec![vec![0; periods]; n],
        route_energy: vec![0.0; n],
        hop_total: 0.0,
        picked: Vec::new(),
    };
    search.sensing(0);

    let certified = !search.aborted && !search.truncated && config.optimality_gap == 0.0;
    let mut solution = search.best_solution.unwrap_or(incumbent);
    solution.provenance = Provenance::Exact;
    solution.wall_time_s = started.elapsed().as_secs_f64();
    Ok(ExactOutcome {
        solution,
        certified,
        nodes: search.nodes,
    })
}
