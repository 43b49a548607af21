//! Exhaustive search over the binaries of an arbitrary `IlpModel`.
//!
//! Binaries are fixed in declaration order, zero before one. A partial
//! assignment is abandoned as soon as some row can no longer be satisfied by
//! any completion, or when its objective bound cannot beat the incumbent.
//! Each continuous variable must appear alone among continuous variables in
//! every row; at a leaf it takes the cheapest value its rows allow.

use std::collections::BTreeSet;
use std::time::Instant;

use super::{check_arcs, Provenance, Solution, SolveError};
use crate::instance::{ArcSets, Instance};
use crate::model::{IlpModel, Sense, VarRef};
use crate::validate::check_feasibility;

const ROW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    pub max_binaries: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self { max_binaries: 40 }
    }
}

struct Row {
    binaries: Vec<(usize, f64)>,
    continuous: Option<(usize, f64)>,
    sense: Sense,
    rhs: f64,
    /// Activity range of the binary part under the current partial assignment.
    bin_min: f64,
    bin_max: f64,
}

impl Row {
    fn cont_range(&self, lower: &[f64], upper: &[f64]) -> (f64, f64) {
        match self.continuous {
            None => (0.0, 0.0),
            Some((v, a)) => {
                let (p, q) = (a * lower[v], a * upper[v]);
                (p.min(q), p.max(q))
            }
        }
    }

    fn satisfiable(&self, lower: &[f64], upper: &[f64]) -> bool {
        let (cmin, cmax) = self.cont_range(lower, upper);
        let lo = self.bin_min + cmin;
        let hi = self.bin_max + cmax;
        match self.sense {
            Sense::Le => lo <= self.rhs + ROW_TOL,
            Sense::Ge => hi >= self.rhs - ROW_TOL,
            Sense::Eq => lo <= self.rhs + ROW_TOL && hi >= self.rhs - ROW_TOL,
        }
    }

    /// Bounds this row implies on its continuous variable, given the binary range.
    fn implied(&self) -> Option<(usize, f64, f64)> {
        let (v, a) = self.continuous?;
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        if matches!(self.sense, Sense::Le | Sense::Eq) {
            let bound = (self.rhs - self.bin_min) / a;
            if a > 0.0 {
                hi = hi.min(bound);
            } else {
                lo = lo.max(bound);
            }
        }
        if matches!(self.sense, Sense::Ge | Sense::Eq) {
            let bound = (self.rhs - self.bin_max) / a;
            if a > 0.0 {
                lo = lo.max(bound);
            } else {
                hi = hi.min(bound);
            }
        }
        Some((v, lo, hi))
    }
}

struct Search<'m> {
    model: &'m IlpModel,
    rows: Vec<Row>,
    /// Rows touching each variable.
    rows_of: Vec<Vec<usize>>,
    binaries: Vec<usize>,
    continuous: Vec<usize>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    fixed_cost: f64,
    /// Sum of min(0, c) over unfixed binaries.
    free_cost: f64,
    collect_ties: bool,
    best: f64,
    found: Vec<Vec<f64>>,
    instance: &'m Instance,
    arcs: &'m ArcSets,
    n_sensors: usize,
}

impl Search<'_> {
    fn fix(&mut self, var: usize, val: f64) {
        for &r in &self.rows_of[var] {
            let row = &mut self.rows[r];
            if let Some(&(_, a)) = row.binaries.iter().find(|(v, _)| *v == var) {
                row.bin_min += a * val - a.min(0.0);
                row.bin_max += a * val - a.max(0.0);
            }
        }
        self.value[var] = val;
        self.fixed_cost += self.cost[var] * val;
        self.free_cost -= self.cost[var].min(0.0);
    }

    fn unfix(&mut self, var: usize) {
        let val = self.value[var];
        for &r in &self.rows_of[var] {
            let row = &mut self.rows[r];
            if let Some(&(_, a)) = row.binaries.iter().find(|(v, _)| *v == var) {
                row.bin_min -= a * val - a.min(0.0);
                row.bin_max -= a * val - a.max(0.0);
            }
        }
        self.fixed_cost -= self.cost[var] * val;
        self.free_cost += self.cost[var].min(0.0);
    }

    /// Cheapest admissible value of every continuous variable, or None when
    /// some variable's implied interval is empty.
    fn continuous_values(&self) -> Option<Vec<(usize, f64)>> {
        let mut out = Vec::with_capacity(self.continuous.len());
        for &v in &self.continuous {
            let mut lo = self.lower[v];
            let mut hi = self.upper[v];
            for &r in &self.rows_of[v] {
                if let Some((_, a, b)) = self.rows[r].implied() {
                    lo = lo.max(a);
                    hi = hi.min(b);
                }
            }
            if lo > hi + ROW_TOL {
                return None;
            }
            let x = if self.cost[v] >= 0.0 { lo.min(hi).max(self.lower[v]) } else { hi };
            if !x.is_finite() {
                return None;
            }
            out.push((v, x));
        }
        Some(out)
    }

    fn bound(&self) -> Option<f64> {
        let cont = self.continuous_values()?;
        Some(self.fixed_cost + self.free_cost + cont.iter().map(|&(v, x)| self.cost[v] * x).sum::<f64>())
    }

    fn eps(&self) -> f64 {
        1e-9 * self.best.abs().max(1.0)
    }

    fn prune(&self, lb: f64) -> bool {
        if !self.best.is_finite() {
            return false;
        }
        if self.collect_ties {
            lb > self.best + self.eps()
        } else {
            lb >= self.best - self.eps()
        }
    }

    fn dfs(&mut self, depth: usize) -> Result<(), SolveError> {
        if depth == self.binaries.len() {
            return self.leaf();
        }
        let var = self.binaries[depth];
        for val in [0.0, 1.0] {
            self.fix(var, val);
            let ok = self.rows_of[var]
                .iter()
                .all(|&r| self.rows[r].satisfiable(&self.lower, &self.upper));
            if ok {
                if let Some(lb) = self.bound() {
                    if !self.prune(lb) {
                        self.dfs(depth + 1)?;
                    }
                }
            }
            self.unfix(var);
        }
        Ok(())
    }

    fn leaf(&mut self) -> Result<(), SolveError> {
        let Some(cont) = self.continuous_values() else {
            return Ok(());
        };
        let mut value = self.value.clone();
        for &(v, x) in &cont {
            value[v] = x;
        }
        if !self.rows.iter().all(|r| row_holds(r, &value)) {
            return Ok(());
        }
        let obj: f64 = self.model.objective.iter().map(|&(v, c)| c * value[self.index(v)]).sum();
        let improves = !self.best.is_finite() || obj < self.best - self.eps();
        let ties = self.collect_ties && self.best.is_finite() && (obj - self.best).abs() <= self.eps();
        if !(improves || ties) {
            return Ok(());
        }
        let sol = self.to_solution(&value);
        let violations = check_feasibility(self.instance, self.arcs, &sol)
            .map_err(|e| SolveError::Rejected(e.to_string()))?;
        if let Some(v) = violations.first() {
            return Err(SolveError::Rejected(format!(
                "model row accepted but validator reports {} (slack {})",
                v.constraint, v.slack
            )));
        }
        if improves {
            self.best = obj;
            self.found.clear();
        }
        self.found.push(value);
        Ok(())
    }

    fn index(&self, v: VarRef) -> usize {
        self.model
            .variables
            .iter()
            .position(|x| x.var == v)
            .expect("objective variables are declared")
    }

    fn to_solution(&self, value: &[f64]) -> Solution {
        let mut ones = BTreeSet::new();
        let mut energy = vec![0.0; self.n_sensors];
        for (k, var) in self.model.variables.iter().enumerate() {
            match var.var {
                VarRef::E { sensor } => energy[sensor] = value[k],
                v if var.binary && value[k] > 0.5 => {
                    ones.insert(v);
                }
                _ => {}
            }
        }
        Solution {
            ones,
            energy,
            provenance: Provenance::Oracle,
            wall_time_s: 0.0,
        }
    }
}

fn row_holds(row: &Row, value: &[f64]) -> bool {
    let mut lhs: f64 = row.binaries.iter().map(|&(v, a)| a * value[v]).sum();
    if let Some((v, a)) = row.continuous {
        lhs += a * value[v];
    }
    row.sense.slack(lhs, row.rhs) >= -ROW_TOL
}

fn prepare<'m>(
    instance: &'m Instance,
    arcs: &'m ArcSets,
    model: &'m IlpModel,
    caps: OracleCaps,
    collect_ties: bool,
) -> Result<Search<'m>, SolveError> {
    check_arcs(instance, arcs)?;
    let binaries_count = model.n_binaries();
    if binaries_count > caps.max_binaries {
        return Err(SolveError::OverCap {
            binaries: binaries_count,
            cap: caps.max_binaries,
        });
    }
    let missing = model.undeclared();
    if let Some(v) = missing.first() {
        return Err(SolveError::ModelMismatch(format!("{v} is used but not declared")));
    }
    let n_sensors = instance.n_sensors();
    for v in &model.variables {
        match v.var {
            VarRef::E { sensor } if sensor >= n_sensors => {
                return Err(SolveError::ModelMismatch(format!("{} has no sensor", v.var)))
            }
            VarRef::E { .. } if v.binary => {
                return Err(SolveError::Unsupported(format!("{} is declared binary", v.var)))
            }
            ref other if !v.binary && other.is_binary() => {
                return Err(SolveError::Unsupported(format!("{other} is declared continuous")))
            }
            _ => {}
        }
    }

    let index = model.index();
    let nv = model.variables.len();
    let mut cost = vec![0.0; nv];
    for &(v, c) in &model.objective {
        cost[index[&v]] += c;
    }
    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let mut rows = Vec::with_capacity(model.constraints.len());
    let mut rows_of = vec![Vec::new(); nv];
    for (r, c) in model.constraints.iter().enumerate() {
        let mut binaries = Vec::new();
        let mut continuous = None;
        for &(v, a) in &c.terms {
            let k = index[&v];
            rows_of[k].push(r);
            if model.variables[k].binary {
                binaries.push((k, a));
            } else if continuous.replace((k, a)).is_some() {
                return Err(SolveError::Unsupported(format!(
                    "row {} has more than one continuous variable",
                    c.tag
                )));
            }
        }
        let bin_min = binaries.iter().map(|&(_, a)| a.min(0.0)).sum();
        let bin_max = binaries.iter().map(|&(_, a)| a.max(0.0)).sum();
        rows.push(Row {
            binaries,
            continuous,
            sense: c.sense,
            rhs: c.rhs,
            bin_min,
            bin_max,
        });
    }
    let binaries: Vec<usize> = (0..nv).filter(|&k| model.variables[k].binary).collect();
    let continuous: Vec<usize> = (0..nv).filter(|&k| !model.variables[k].binary).collect();
    let free_cost = binaries.iter().map(|&k| cost[k].min(0.0)).sum();
    Ok(Search {
        model,
        rows,
        rows_of,
        binaries,
        continuous,
        cost,
        lower,
        upper,
        value: vec![0.0; nv],
        fixed_cost: 0.0,
        free_cost,
        collect_ties,
        best: f64::INFINITY,
        found: Vec::new(),
        instance,
        arcs,
        n_sensors,
    })
}

/// Lexicographically first optimal assignment (declaration order, zero
/// before one), or None when the model is infeasible.
pub fn brute_force_oracle(
    instance: &Instance,
    arcs: &ArcSets,
    model: &IlpModel,
    caps: OracleCaps,
) -> Result<Option<Solution>, SolveError> {
    let started = Instant::now();
    let mut search = prepare(instance, arcs, model, caps, false)?;
    search.dfs(0)?;
    Ok(search.found.first().map(|v| {
        let mut sol = search.to_solution(v);
        sol.wall_time_s = started.elapsed().as_secs_f64();
        sol
    }))
}

/// The optimal value and every assignment attaining it.
pub fn brute_force_optima(
    instance: &Instance,
    arcs: &ArcSets,
    model: &IlpModel,
    caps: OracleCaps,
) -> Result<Option<(f64, Vec<Solution>)>, SolveError> {
    let mut search = prepare(instance, arcs, model, caps, true)?;
    search.dfs(0)?;
    if search.found.is_empty() {
        return Ok(None);
    }
    let sols = search.found.iter().map(|v| search.to_solution(v)).collect();
    Ok(Some((search.best, sols)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{build_arcs, gen_grid, Area, Phenomenon, Point2D, ScenarioConfig, SinkLayout};
    use crate::model::build_model;

    fn one_sensor() -> Instance {
        let cfg = ScenarioConfig {
            phenomena: vec![Phenomenon::new(1, 3.0, 2.0, 16)],
            sinks: SinkLayout::Coords(vec![Point2D::new(5.0, 9.0)]),
            ..ScenarioConfig::paper()
        };
        let mut inst = gen_grid(1, 1, 1, 1, Area::new(10.0, 10.0), &cfg).unwrap();
        inst.demand_points[0].position = Point2D::new(6.0, 5.0);
        inst
    }

    #[test]
    fn single_sensor_covers_its_point() {
        let inst = one_sensor();
        let arcs = build_arcs(&inst);
        let model = build_model(&inst, &arcs).unwrap();
        let sol = brute_force_oracle(&inst, &arcs, &model, OracleCaps::default())
            .unwrap()
            .unwrap();
        let names: Vec<String> = sol.ones.iter().map(|v| v.to_string()).collect();
        assert_eq!(names.len(), 5);
        assert!(sol.is_one(&VarRef::X { sensor: 0, dp: 0, period: 0, phen: 0 }));
        let expected = inst.device.maintenance_energy
            + inst.device.activation_energy
            + 1920.0 * 1e-4;
        assert!((sol.energy[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_models() {
        let inst = crate::instance::paper_scenario(1, 1).unwrap();
        let arcs = build_arcs(&inst);
        let model = build_model(&inst, &arcs).unwrap();
        assert!(matches!(
            brute_force_oracle(&inst, &arcs, &model, OracleCaps::default()),
            Err(SolveError::OverCap { .. })
        ));
    }

    #[test]
    fn ties_are_all_reported() {
        let mut inst = one_sensor();
        inst.device.battery_capacity = 0.5;
        let arcs = build_arcs(&inst);
        let model = build_model(&inst, &arcs).unwrap();
        let (best, sols) = brute_force_optima(&inst, &arcs, &model, OracleCaps::default())
            .unwrap()
            .unwrap();
        assert_eq!(best, inst.penalties.uncovered[0]);
        assert_eq!(sols.len(), 1);
        assert!(sols[0].is_one(&VarRef::H { dp: 0, period: 0, phen: 0 }));
    }
}
