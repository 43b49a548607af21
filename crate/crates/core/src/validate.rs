//! Feasibility checking and metrics for a complete assignment.
//!
//! Every constraint family is re-evaluated here from the instance geometry
//! alone, without going through the model builder, so a bug in one does not
//! hide in the other.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::instance::{build_arcs, derive_energy_constants, ArcSets, Instance};
use crate::model::{ConstraintTag, Family, Sense, VarRef};
use crate::network::Node;
use crate::solve::Solution;

/// Tolerance on rows made of binaries only.
const BINARY_TOL: f64 = 1e-9;
/// Tolerance on the energy rows and battery bounds.
const ENERGY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: String,
    pub family: String,
    pub indices: Vec<(char, usize)>,
    pub lhs: f64,
    pub sense: Sense,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ValidateError {
    #[error("arc sets were not derived from this instance")]
    ArcMismatch,
    #[error("variable {0} does not exist for this instance")]
    UnknownIndex(String),
    #[error("expected {expected} energy values, found {found}")]
    EnergyLength { expected: usize, found: usize },
    #[error("solution violates {} constraint(s), first {}", .0.len(), .0[0].constraint)]
    Infeasible(Vec<Violation>),
}

/// A routing problem found by walking the flow of one commodity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteIssue {
    pub source: usize,
    pub period: usize,
    pub phen: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// Energy plus uncovered and activation penalties.
    pub objective: f64,
    /// Energy only.
    pub real_objective: f64,
    pub penalty_total: f64,
    pub uncovered: usize,
    pub demanded: usize,
    /// Uncovered demanded (point, period, phenomenon) triples over all demanded triples.
    pub uncovered_rate: f64,
    pub per_sensor_energy: Vec<f64>,
    pub activations: usize,
    pub sensing_events: usize,
    pub on_sensor_periods: usize,
}

/// Dense view of an assignment over the instance index space.
struct Dense {
    n: usize,
    nd: usize,
    periods: usize,
    ng: usize,
    /// Coverage radius test per (g, i, j), only for demanded points.
    can_cover: Vec<bool>,
    /// Sensor-to-sensor adjacency within communication range, (i, j).
    link: Vec<bool>,
    /// Sensor-to-sink adjacency, (i, m).
    sink_link: Vec<bool>,
    n_sinks: usize,
    x: Vec<bool>,
    y: Vec<bool>,
    w: Vec<bool>,
    r: Vec<bool>,
    h: Vec<bool>,
    /// z over (l, t, g, from, head) with head in sensors then sinks.
    z: Vec<bool>,
}

impl Dense {
    fn xi(&self, i: usize, j: usize, t: usize, g: usize) -> usize {
        ((t * self.ng + g) * self.n + i) * self.nd + j
    }
    fn yi(&self, i: usize, t: usize) -> usize {
        i * self.periods + t
    }
    fn ri(&self, i: usize, t: usize, g: usize) -> usize {
        (t * self.ng + g) * self.n + i
    }
    fn hi(&self, j: usize, t: usize, g: usize) -> usize {
        (t * self.ng + g) * self.nd + j
    }
    fn heads(&self) -> usize {
        self.n + self.n_sinks
    }
    fn zi(&self, l: usize, t: usize, g: usize, from: usize, head: usize) -> usize {
        (((l * self.periods + t) * self.ng + g) * self.n + from) * self.heads() + head
    }
    fn cov(&self, g: usize, i: usize, j: usize) -> bool {
        self.can_cover[(g * self.n + i) * self.nd + j]
    }
    fn is_source(&self, g: usize, i: usize) -> bool {
        (0..self.nd).any(|j| self.cov(g, i, j))
    }
    fn arc_exists(&self, from: usize, head: usize) -> bool {
        if head < self.n {
            self.link[from * self.n + head]
        } else {
            self.sink_link[from * self.n_sinks + head - self.n]
        }
    }
}

fn densify(instance: &Instance, arcs: &ArcSets, solution: &Solution) -> Result<Dense, ValidateError> {
    if build_arcs(instance) != *arcs {
        return Err(ValidateError::ArcMismatch);
    }
    let n = instance.n_sensors();
    let nd = instance.n_demand_points();
    let periods = instance.periods;
    let ng = instance.n_phenomena();
    let n_sinks = instance.n_sinks();
    if solution.energy.len() != n {
        return Err(ValidateError::EnergyLength {
            expected: n,
            found: solution.energy.len(),
        });
    }

    let mut can_cover = vec![false; ng * n * nd];
    for (g, list) in arcs.coverage.iter().enumerate() {
        for &(i, j) in list {
            if instance.demands(j, g) {
                can_cover[(g * n + i) * nd + j] = true;
            }
        }
    }
    let mut link = vec![false; n * n];
    for &(i, j) in &arcs.comm {
        link[i * n + j] = true;
    }
    let mut sink_link = vec![false; n * n_sinks];
    for &(i, m) in &arcs.to_sink {
        sink_link[i * n_sinks + m] = true;
    }

    let mut d = Dense {
        n,
        nd,
        periods,
        ng,
        can_cover,
        link,
        sink_link,
        n_sinks,
        x: vec![false; periods * ng * n * nd],
        y: vec![false; n * periods],
        w: vec![false; n * periods],
        r: vec![false; periods * ng * n],
        h: vec![false; periods * ng * nd],
        z: vec![false; n * periods * ng * n * (n + n_sinks)],
    };
    for v in &solution.ones {
        let bad = || ValidateError::UnknownIndex(v.to_string());
        match *v {
            VarRef::X { sensor, dp, period, phen } => {
                if sensor >= n || dp >= nd || period >= periods || phen >= ng || !d.cov(phen, sensor, dp) {
                    return Err(bad());
                }
                let k = d.xi(sensor, dp, period, phen);
                d.x[k] = true;
            }
            VarRef::Y { sensor, period } | VarRef::W { sensor, period } => {
                if sensor >= n || period >= periods {
                    return Err(bad());
                }
                let k = d.yi(sensor, period);
                if matches!(v, VarRef::Y { .. }) {
                    d.y[k] = true;
                } else {
                    d.w[k] = true;
                }
            }
            VarRef::R { sensor, period, phen } => {
                if sensor >= n || period >= periods || phen >= ng || !d.is_source(phen, sensor) {
                    return Err(bad());
                }
                let k = d.ri(sensor, period, phen);
                d.r[k] = true;
            }
            VarRef::H { dp, period, phen } => {
                if dp >= nd || period >= periods || phen >= ng || !instance.demands(dp, phen) {
                    return Err(bad());
                }
                let k = d.hi(dp, period, phen);
                d.h[k] = true;
            }
            VarRef::Z { source, from, to, period, phen } => {
                let head = match to {
                    Node::Sensor(j) if j < n => j,
                    Node::Sink(m) if m < n_sinks => n + m,
                    _ => return Err(bad()),
                };
                if source >= n
                    || from >= n
                    || period >= periods
                    || phen >= ng
                    || !d.is_source(phen, source)
                    || head == source
                    || !d.arc_exists(from, head)
                {
                    return Err(bad());
                }
                let k = d.zi(source, period, phen, from, head);
                d.z[k] = true;
            }
            VarRef::E { .. } => return Err(bad()),
        }
    }
    Ok(d)
}

fn b(v: bool) -> f64 {
    if v {
        1.0
    } else {
        0.0
    }
}

struct Collector {
    violations: Vec<Violation>,
}

impl Collector {
    fn row(&mut self, tag: ConstraintTag, lhs: f64, sense: Sense, rhs: f64, tol: f64) {
        let slack = sense.slack(lhs, rhs);
        if slack < -tol {
            self.violations.push(Violation {
                constraint: tag.name(),
                family: tag.family.to_string(),
                indices: tag.indices.clone(),
                lhs,
                sense,
                rhs,
                slack,
            });
        }
    }
}

/// Energy each sensor draws under the assignment, computed from geometry.
fn drawn_energy(instance: &Instance, d: &Dense) -> Vec<f64> {
    let mult = instance.fixed_energy_multiplier();
    let dev = &instance.device;
    let mut e = vec![0.0; d.n];
    for i in 0..d.n {
        for t in 0..d.periods {
            e[i] += mult * dev.maintenance_energy * b(d.y[d.yi(i, t)]);
            e[i] += mult * dev.activation_energy * b(d.w[d.yi(i, t)]);
        }
    }
    for g in 0..d.ng {
        let p = &instance.phenomena[g];
        for from in 0..d.n {
            for head in 0..d.heads() {
                if !d.arc_exists(from, head) {
                    continue;
                }
                let target = if head < d.n {
                    instance.sensors[head]
                } else {
                    instance.sinks[head - d.n]
                };
                let dist = instance.sensors[from].distance(&target);
                let k = derive_energy_constants(dev, p, instance.period_length_min, dist)
                    .expect("validated instance has a positive period length");
                for l in 0..d.n {
                    for t in 0..d.periods {
                        if d.z[d.zi(l, t, g, from, head)] {
                            e[from] += k.transmit;
                            if head < d.n {
                                e[head] += k.receive;
                            }
                        }
                    }
                }
            }
        }
    }
    e
}

/// Evaluates every constraint family and returns the violated rows. An empty
/// list means the assignment is feasible.
pub fn check_feasibility(
    instance: &Instance,
    arcs: &ArcSets,
    solution: &Solution,
) -> Result<Vec<Violation>, ValidateError> {
    let d = densify(instance, arcs, solution)?;
    let mut out = Collector { violations: Vec::new() };
    let (n, nd, periods, ng) = (d.n, d.nd, d.periods, d.ng);

    for t in 0..periods {
        for g in 0..ng {
            for j in (0..nd).filter(|&j| instance.demands(j, g)) {
                let covered: f64 = (0..n).filter(|&i| d.cov(g, i, j)).map(|i| b(d.x[d.xi(i, j, t, g)])).sum();
                let lhs = covered + b(d.h[d.hi(j, t, g)]);
                out.row(ConstraintTag::new(Family::C2, &[('j', j), ('t', t), ('g', g)]), lhs, Sense::Ge, 1.0, BINARY_TOL);
            }
        }
    }
    for t in 0..periods {
        for g in 0..ng {
            for i in 0..n {
                for j in (0..nd).filter(|&j| d.cov(g, i, j)) {
                    let lhs = b(d.x[d.xi(i, j, t, g)]) - b(d.r[d.ri(i, t, g)]);
                    out.row(
                        ConstraintTag::new(Family::C3, &[('i', i), ('j', j), ('t', t), ('g', g)]),
                        lhs,
                        Sense::Le,
                        0.0,
                        BINARY_TOL,
                    );
                }
            }
        }
    }
    for t in 0..periods {
        for g in 0..ng {
            for i in (0..n).filter(|&i| d.is_source(g, i)) {
                let lhs = b(d.r[d.ri(i, t, g)]) - b(d.y[d.yi(i, t)]);
                out.row(ConstraintTag::new(Family::C4, &[('i', i), ('t', t), ('g', g)]), lhs, Sense::Le, 0.0, BINARY_TOL);
            }
        }
    }
    for t in 0..periods {
        for g in 0..ng {
            for l in (0..n).filter(|&l| d.is_source(g, l)) {
                for j in (0..n).filter(|&j| j != l) {
                    let inflow: Vec<f64> = (0..n)
                        .filter(|&i| i != j && d.arc_exists(i, j))
                        .map(|i| b(d.z[d.zi(l, t, g, i, j)]))
                        .collect();
                    let outflow: Vec<f64> = (0..d.heads())
                        .filter(|&k| k != l && d.arc_exists(j, k))
                        .map(|k| b(d.z[d.zi(l, t, g, j, k)]))
                        .collect();
                    if inflow.is_empty() && outflow.is_empty() {
                        continue;
                    }
                    let lhs = inflow.iter().sum::<f64>() - outflow.iter().sum::<f64>();
                    out.row(
                        ConstraintTag::new(Family::C5, &[('l', l), ('j', j), ('t', t), ('g', g)]),
                        lhs,
                        Sense::Eq,
                        0.0,
                        BINARY_TOL,
                    );
                }
            }
        }
    }
    for t in 0..periods {
        for g in 0..ng {
            for l in (0..n).filter(|&l| d.is_source(g, l)) {
                let emitted: f64 = (0..d.heads())
                    .filter(|&k| k != l && d.arc_exists(l, k))
                    .map(|k| b(d.z[d.zi(l, t, g, l, k)]))
                    .sum();
                let lhs = emitted - b(d.r[d.ri(l, t, g)]);
                out.row(ConstraintTag::new(Family::C6, &[('l', l), ('t', t), ('g', g)]), lhs, Sense::Eq, 0.0, BINARY_TOL);
            }
        }
    }
    for t in 0..periods {
        for g in 0..ng {
            for l in (0..n).filter(|&l| d.is_source(g, l)) {
                for from in 0..n {
                    for head in (0..d.heads()).filter(|&k| k != l && d.arc_exists(from, k)) {
                        let z = b(d.z[d.zi(l, t, g, from, head)]);
                        let head_idx = if head < n { ('j', head) } else { ('m', head - n) };
                        let idx = [('l', l), ('i', from), head_idx, ('t', t), ('g', g)];
                        out.row(
                            ConstraintTag::new(Family::C7, &idx),
                            z - b(d.y[d.yi(from, t)]),
                            Sense::Le,
                            0.0,
                            BINARY_TOL,
                        );
                        if head < n {
                            out.row(
                                ConstraintTag::new(Family::C8, &idx),
                                z - b(d.y[d.yi(head, t)]),
                                Sense::Le,
                                0.0,
                                BINARY_TOL,
                            );
                        }
                    }
                }
            }
        }
    }
    let drawn = drawn_energy(instance, &d);
    let battery = instance.device.battery_capacity;
    for i in 0..n {
        let e = solution.energy[i];
        out.row(ConstraintTag::new(Family::C9, &[('i', i)]), drawn[i] - e, Sense::Le, 0.0, ENERGY_TOL);
        out.row(ConstraintTag::new(Family::C10, &[('i', i)]), e, Sense::Ge, 0.0, ENERGY_TOL);
        out.row(ConstraintTag::new(Family::C10, &[('i', i)]), e, Sense::Le, battery, ENERGY_TOL);
    }
    for i in 0..n {
        let lhs = b(d.w[d.yi(i, 0)]) - b(d.y[d.yi(i, 0)]);
        out.row(ConstraintTag::new(Family::C11, &[('i', i)]), lhs, Sense::Ge, 0.0, BINARY_TOL);
        for t in 1..periods {
            let lhs = b(d.w[d.yi(i, t)]) - b(d.y[d.yi(i, t)]) + b(d.y[d.yi(i, t - 1)]);
            out.row(ConstraintTag::new(Family::C12, &[('i', i), ('t', t)]), lhs, Sense::Ge, 0.0, BINARY_TOL);
        }
    }
    Ok(out.violations)
}

/// Walks every sensing commodity from its source along the arcs it uses and
/// reports sources whose data never reaches a sink through switched-on nodes.
pub fn check_routes(
    instance: &Instance,
    arcs: &ArcSets,
    solution: &Solution,
) -> Result<Vec<RouteIssue>, ValidateError> {
    let d = densify(instance, arcs, solution)?;
    let mut issues = Vec::new();
    for t in 0..d.periods {
        for g in 0..d.ng {
            for l in 0..d.n {
                if !d.r[d.ri(l, t, g)] {
                    continue;
                }
                let mut seen = vec![false; d.n];
                let mut queue = VecDeque::from([l]);
                seen[l] = true;
                let mut reached = false;
                while let Some(u) = queue.pop_front() {
                    if !d.y[d.yi(u, t)] {
                        continue;
                    }
                    for head in 0..d.heads() {
                        if head == l || !d.arc_exists(u, head) || !d.z[d.zi(l, t, g, u, head)] {
                            continue;
                        }
                        if head >= d.n {
                            reached = true;
                        } else if !seen[head] {
                            seen[head] = true;
                            queue.push_back(head);
                        }
                    }
                }
                if !reached {
                    issues.push(RouteIssue {
                        source: l,
                        period: t,
                        phen: g,
                        message: format!("data sensed by sensor {l} never reaches a sink"),
                    });
                }
            }
        }
    }
    Ok(issues)
}

/// Checks feasibility, then reports objective terms and coverage figures.
pub fn evaluate(instance: &Instance, arcs: &ArcSets, solution: &Solution) -> Result<Metrics, ValidateError> {
    let violations = check_feasibility(instance, arcs, solution)?;
    if !violations.is_empty() {
        return Err(ValidateError::Infeasible(violations));
    }
    let d = densify(instance, arcs, solution)?;
    let real_objective: f64 = solution.energy.iter().sum();
    let mut penalty_total = 0.0;
    let mut uncovered = 0;
    let mut demanded = 0;
    let mut sensing_events = 0;
    for t in 0..d.periods {
        for g in 0..d.ng {
            for j in (0..d.nd).filter(|&j| instance.demands(j, g)) {
                demanded += 1;
                if d.h[d.hi(j, t, g)] {
                    uncovered += 1;
                    penalty_total += instance.penalties.uncovered[g];
                }
            }
            for i in 0..d.n {
                if d.r[d.ri(i, t, g)] {
                    sensing_events += 1;
                    penalty_total += instance.penalties.activation[g];
                }
            }
        }
    }
    Ok(Metrics {
        objective: real_objective + penalty_total,
        real_objective,
        penalty_total,
        uncovered,
        demanded,
        uncovered_rate: if demanded == 0 {
            0.0
        } else {
            uncovered as f64 / demanded as f64
        },
        per_sensor_energy: solution.energy.clone(),
        activations: d.w.iter().filter(|&&v| v).count(),
        sensing_events,
        on_sensor_periods: d.y.iter().filter(|&&v| v).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::paper_scenario;
    use crate::solve::{solve_heuristic, Provenance, SolveConfig};
    use std::collections::BTreeSet;

    fn empty(instance: &Instance) -> Solution {
        Solution {
            ones: BTreeSet::new(),
            energy: vec![0.0; instance.n_sensors()],
            provenance: Provenance::External,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn all_zero_violates_exactly_the_coverage_rows() {
        let inst = paper_scenario(1, 1).unwrap();
        let v = check_feasibility(&inst, &build_arcs(&inst), &empty(&inst)).unwrap();
        assert_eq!(v.len(), inst.demanded_triples());
        assert!(v.iter().all(|v| v.family == "C2" && v.slack == -1.0));
    }

    #[test]
    fn heuristic_schedule_is_feasible_and_routed() {
        let inst = paper_scenario(2, 2).unwrap();
        let sol = solve_heuristic(&inst, &build_arcs(&inst), &SolveConfig::default()).unwrap();
        let arcs = build_arcs(&inst);
        assert!(check_feasibility(&inst, &arcs, &sol).unwrap().is_empty());
        assert!(check_routes(&inst, &arcs, &sol).unwrap().is_empty());
        let m = evaluate(&inst, &arcs, &sol).unwrap();
        assert!((m.objective - m.real_objective - m.penalty_total).abs() < 1e-9);
    }

    #[test]
    fn unknown_indices_are_not_violations() {
        let inst = paper_scenario(1, 1).unwrap();
        let mut sol = empty(&inst);
        sol.ones.insert(VarRef::Y { sensor: 99, period: 0 });
        assert!(matches!(check_feasibility(&inst, &build_arcs(&inst), &sol), Err(ValidateError::UnknownIndex(_))));
        let mut sol = empty(&inst);
        sol.energy.pop();
        assert!(matches!(check_feasibility(&inst, &build_arcs(&inst), &sol), Err(ValidateError::EnergyLength { .. })));
    }

    #[test]
    fn overdrawn_battery_is_reported() {
        let inst = paper_scenario(1, 1).unwrap();
        let mut sol = empty(&inst);
        for t in 0..inst.periods {
            for j in 0..inst.n_demand_points() {
                for g in 0..inst.n_phenomena() {
                    sol.ones.insert(VarRef::H { dp: j, period: t, phen: g });
                }
            }
        }
        sol.energy[3] = inst.device.battery_capacity + 1.0;
        let v = check_feasibility(&inst, &build_arcs(&inst), &sol).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, "c10_i3");
    }
}
