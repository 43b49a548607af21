//! Solvers: exact depth-first branch and bound for small instances, an
//! exhaustive oracle over the model's binaries, and a period-by-period
//! greedy heuristic for field-scale instances.

mod exact;
mod external;
mod heuristic;
mod oracle;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{build_arcs, ArcSets, Instance};
use crate::model::VarRef;
use crate::network::{Network, Node};

pub use exact::{solve_exact, ExactOutcome};
pub use external::{import_external, ImportError};
pub use heuristic::solve_heuristic;
pub use oracle::{brute_force_optima, brute_force_oracle, OracleCaps};

pub const SOLUTION_FORMAT: &str = "wsn-solution/1";

/// Slack allowed on battery comparisons inside the solvers.
pub(crate) const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("arc sets were not derived from this instance")]
    ArcMismatch,
    #[error("model does not match the instance: {0}")]
    ModelMismatch(String),
    #[error("model has {binaries} binary variables, above the oracle cap of {cap}")]
    OverCap { binaries: usize, cap: usize },
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("solver produced an assignment the validator rejects: {0}")]
    Rejected(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Oracle,
    Heuristic,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub time_limit_s: f64,
    pub node_limit: u64,
    /// Relative gap at which the exact search stops improving.
    pub optimality_gap: f64,
    /// Zero breaks heuristic ties by lowest sensor index; any other value by a
    /// seeded permutation of the sensors.
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            time_limit_s: 60.0,
            node_limit: 20_000_000,
            optimality_gap: 0.0,
            seed: 0,
        }
    }
}

/// Assignment of every decision variable: the binaries set to one, and the
/// energy drawn by each sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub ones: BTreeSet<VarRef>,
    pub energy: Vec<f64>,
    pub provenance: Provenance,
    pub wall_time_s: f64,
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    format: String,
    provenance: Provenance,
    wall_time_s: f64,
    ones: Vec<String>,
    energy: Vec<f64>,
}

impl Solution {
    pub fn is_one(&self, v: &VarRef) -> bool {
        self.ones.contains(v)
    }

    /// Same binaries and energies within `tol`, ignoring provenance and timing.
    pub fn same_assignment(&self, other: &Solution, tol: f64) -> bool {
        self.ones == other.ones
            && self.energy.len() == other.energy.len()
            && self
                .energy
                .iter()
                .zip(&other.energy)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn to_json(&self) -> String {
        let file = SolutionFile {
            format: SOLUTION_FORMAT.into(),
            provenance: self.provenance,
            wall_time_s: self.wall_time_s,
            ones: self.ones.iter().map(|v| v.to_string()).collect(),
            energy: self.energy.clone(),
        };
        serde_json::to_string_pretty(&file).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Solution, ImportError> {
        let file: SolutionFile =
            serde_json::from_str(text).map_err(|e| ImportError::Malformed(e.to_string()))?;
        if file.format != SOLUTION_FORMAT {
            return Err(ImportError::Malformed(format!(
                "unsupported solution format {:?}",
                file.format
            )));
        }
        let ones = file
            .ones
            .iter()
            .map(|n| {
                VarRef::from_name(n)
                    .filter(VarRef::is_binary)
                    .ok_or_else(|| ImportError::UnknownVariable(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Solution {
            ones,
            energy: file.energy,
            provenance: file.provenance,
            wall_time_s: file.wall_time_s,
        })
    }
}

pub(crate) fn check_arcs(instance: &Instance, arcs: &ArcSets) -> Result<(), SolveError> {
    if build_arcs(instance) == *arcs {
        Ok(())
    } else {
        Err(SolveError::ArcMismatch)
    }
}

/// Energy balance of every sensor evaluated with equality.
pub(crate) fn tight_energy(net: &Network, ones: &BTreeSet<VarRef>) -> Vec<f64> {
    let mut e = vec![0.0; net.n_sensors()];
    for v in ones {
        match *v {
            VarRef::Y { sensor, .. } => e[sensor] += net.maintenance(),
            VarRef::W { sensor, .. } => e[sensor] += net.activation(),
            VarRef::Z { from, to, phen, .. } => {
                let a = net.arc_index(from, to).expect("z on an existing arc");
                e[from] += net.transmit[phen][a];
                if let Node::Sensor(j) = to {
                    e[j] += net.receive[phen];
                }
            }
            _ => {}
        }
    }
    e
}

/// Objective value: energy plus uncovered and activation penalties.
pub(crate) fn objective_value(net: &Network, ones: &BTreeSet<VarRef>, energy: &[f64]) -> f64 {
    let penalties = &net.instance.penalties;
    let mut obj: f64 = energy.iter().sum();
    for v in ones {
        match *v {
            VarRef::H { phen, .. } => obj += penalties.uncovered[phen],
            VarRef::R { phen, .. } => obj += penalties.activation[phen],
            _ => {}
        }
    }
    obj
}

/// A commodity (source, period, phenomenon) with its chosen route as arc indices.
pub(crate) type Route = ((usize, usize, usize), Vec<usize>);

/// Completes a schedule from sensing decisions and routes: nodes on a route or
/// sensing are on, every sensing node covers everything it can, activation
/// events follow on/off transitions and energies are tight.
pub(crate) fn assemble(
    net: &Network,
    sensing: &[(usize, usize, usize)],
    routes: &[Route],
    provenance: Provenance,
) -> Solution {
    let inst = net.instance;
    let (n, periods, ng) = (net.n_sensors(), net.periods(), net.n_phenomena());
    let mut on = vec![vec![false; periods]; n];
    let mut covered = vec![vec![vec![false; inst.n_demand_points()]; ng]; periods];
    let mut ones = BTreeSet::new();
    for &(i, t, g) in sensing {
        on[i][t] = true;
        ones.insert(VarRef::R { sensor: i, period: t, phen: g });
        for &j in &net.covers[g][i] {
            covered[t][g][j] = true;
            ones.insert(VarRef::X { sensor: i, dp: j, period: t, phen: g });
        }
    }
    for ((l, t, g), path) in routes {
        for &a in path {
            let arc = net.arcs[a];
            on[arc.from][*t] = true;
            if let Node::Sensor(j) = arc.to {
                on[j][*t] = true;
            }
            ones.insert(VarRef::Z {
                source: *l,
                from: arc.from,
                to: arc.to,
                period: *t,
                phen: *g,
            });
        }
    }
    for (i, row) in on.iter().enumerate() {
        for t in 0..periods {
            if row[t] {
                ones.insert(VarRef::Y { sensor: i, period: t });
                if t == 0 || !row[t - 1] {
                    ones.insert(VarRef::W { sensor: i, period: t });
                }
            }
        }
    }
    for (t, per_g) in covered.iter().enumerate() {
        for (g, flags) in per_g.iter().enumerate() {
            for (j, &c) in flags.iter().enumerate() {
                if !c && inst.demands(j, g) {
                    ones.insert(VarRef::H { dp: j, period: t, phen: g });
                }
            }
        }
    }
    let energy = tight_energy(net, &ones);
    Solution {
        ones,
        energy,
        provenance,
        wall_time_s: 0.0,
    }
}

/// Cheapest energy route (transmit plus relay receive) from `source` to any
/// sink for phenomenon `g`, ignoring batteries. Returns infinity when no sink
/// is reachable.
pub(crate) fn min_route_cost(net: &Network, source: usize, g: usize) -> f64 {
    let n = net.n_sensors();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    let mut best = f64::INFINITY;
    loop {
        let Some(u) = (0..n)
            .filter(|&k| !done[k] && dist[k].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
        else {
            break;
        };
        done[u] = true;
        for &a in &net.out_arcs[u] {
            let d = dist[u] + net.hop_cost(g, a);
            match net.arcs[a].to {
                Node::Sink(_) => best = best.min(d),
                Node::Sensor(v) if v != source && d < dist[v] => dist[v] = d,
                Node::Sensor(_) => {}
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_random, Area, ScenarioConfig};

    #[test]
    fn solution_json_round_trip() {
        let inst = gen_random(4, 6, Area::new(10.0, 10.0), 5, &ScenarioConfig::paper()).unwrap();
        let arcs = build_arcs(&inst);
        let sol = solve_heuristic(&inst, &arcs, &SolveConfig::default()).unwrap();
        let back = Solution::from_json(&sol.to_json()).unwrap();
        assert_eq!(sol, back);
    }

    #[test]
    fn rejects_continuous_names_in_ones() {
        let text = r#"{"format":"wsn-solution/1","provenance":"external","wall_time_s":0,"ones":["e_i0"],"energy":[0]}"#;
        assert!(matches!(Solution::from_json(text), Err(ImportError::UnknownVariable(_))));
    }
}
