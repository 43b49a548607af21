use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::instance::{build_arcs, gen_grid, gen_random, Area, Instance, ScenarioConfig};
use crate::model::build_model;
use crate::solve::{brute_force_oracle, solve_exact, solve_heuristic, OracleCaps, Solution, SolveConfig};
use crate::validate::{check_feasibility, check_routes, evaluate, Metrics};

pub const EXPERIMENT_FORMAT: &str = "wsn-experiment/1";

pub const CSV_HEADER: &str = "periods,type,objective_mean,objective_std,real_objective_mean,real_objective_std,uncovered_rate_mean,uncovered_rate_std,time_mean_s,time_std_s,n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    Heuristic,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceType {
    Grid,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBlock {
    pub sensor_rows: usize,
    pub sensor_cols: usize,
    pub dp_rows: usize,
    pub dp_cols: usize,
    pub area: Area,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBlock {
    pub sensors: usize,
    pub demand_points: usize,
    pub area: Area,
    pub seeds: Vec<u64>,
}

/// One experiment: every period count is run on the grid layout (once) and
/// on each random seed, with the same scenario constants and solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub format: String,
    pub solver: SolverKind,
    pub periods: Vec<usize>,
    #[serde(default)]
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub random: Option<RandomBlock>,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub solve: SolveConfig,
}

impl ExperimentSpec {
    /// Grid and random cells over `periods` with the 10 m x 10 m field
    /// parameters, ten random seeds and the heuristic solver.
    pub fn paper_shaped(periods: Vec<usize>) -> ExperimentSpec {
        let area = Area::new(10.0, 10.0);
        ExperimentSpec {
            format: EXPERIMENT_FORMAT.into(),
            solver: SolverKind::Heuristic,
            periods,
            grid: Some(GridBlock {
                sensor_rows: 4,
                sensor_cols: 4,
                dp_rows: 10,
                dp_cols: 10,
                area,
            }),
            random: Some(RandomBlock {
                sensors: 16,
                demand_points: 100,
                area,
                seeds: (1..=10).collect(),
            }),
            scenario: ScenarioConfig::paper(),
            solve: SolveConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<ExperimentSpec, ReportError> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| ReportError::Spec(e.to_string()))?;
        if spec.format != EXPERIMENT_FORMAT {
            return Err(ReportError::Spec(format!(
                "unsupported experiment format {:?}",
                spec.format
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("experiment spec serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub periods: usize,
    #[serde(rename = "type")]
    pub instance_type: InstanceType,
    pub objective_mean: f64,
    pub objective_std: f64,
    pub real_objective_mean: f64,
    pub real_objective_std: f64,
    pub uncovered_rate_mean: f64,
    pub uncovered_rate_std: f64,
    pub time_mean_s: f64,
    pub time_std_s: f64,
    #[serde(rename = "n")]
    pub n_instances: usize,
}

struct Run {
    periods: usize,
    kind: InstanceType,
    label: String,
    instance: Instance,
}

/// Mean and population standard deviation. Deviations are taken about the
/// first sample so identical samples give exactly zero spread.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let k = values[0];
    let shift = values.iter().map(|v| v - k).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - k - shift).powi(2)).sum::<f64>() / n;
    (k + shift, var.sqrt())
}

fn solve_one(spec: &ExperimentSpec, run: &Run) -> Result<(Solution, Metrics), ReportError> {
    let cell = &run.label;
    let fail = |message: String| ReportError::Solve {
        cell: cell.clone(),
        message,
    };
    let inst = &run.instance;
    let arcs = build_arcs(inst);
    let solution = match spec.solver {
        SolverKind::Heuristic => solve_heuristic(inst, &arcs, &spec.solve).map_err(|e| fail(e.to_string()))?,
        SolverKind::Exact => {
            let model = build_model(inst, &arcs).map_err(|e| fail(e.to_string()))?;
            solve_exact(inst, &arcs, &model, &spec.solve)
                .map_err(|e| fail(e.to_string()))?
                .solution
        }
        SolverKind::Oracle => {
            let model = build_model(inst, &arcs).map_err(|e| fail(e.to_string()))?;
            brute_force_oracle(inst, &arcs, &model, OracleCaps::default())
                .map_err(|e| fail(e.to_string()))?
                .ok_or_else(|| fail("model has no feasible assignment".into()))?
        }
    };
    let infeasible = |message: String| ReportError::Infeasible {
        cell: cell.clone(),
        message,
    };
    let violations = check_feasibility(inst, &arcs, &solution).map_err(|e| infeasible(e.to_string()))?;
    if let Some(v) = violations.first() {
        return Err(infeasible(format!("{} violated ({} rows)", v.constraint, violations.len())));
    }
    let issues = check_routes(inst, &arcs, &solution).map_err(|e| infeasible(e.to_string()))?;
    if let Some(issue) = issues.first() {
        return Err(infeasible(issue.message.clone()));
    }
    let metrics = evaluate(inst, &arcs, &solution).map_err(|e| infeasible(e.to_string()))?;
    let gap = metrics.objective - metrics.real_objective - metrics.penalty_total;
    if gap.abs() > 1e-9 * metrics.objective.abs().max(1.0) || metrics.objective < metrics.real_objective - 1e-9 {
        return Err(ReportError::Accounting {
            cell: cell.clone(),
            objective: metrics.objective,
            real: metrics.real_objective,
            penalty: metrics.penalty_total,
        });
    }
    Ok((solution, metrics))
}

/// Generates, solves, validates and evaluates every run, then aggregates one
/// row per (periods, instance type) in the order periods, grid, random. Runs
/// execute in parallel; any infeasible output aborts the experiment.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>, ReportError> {
    if spec.periods.is_empty() || spec.periods.contains(&0) {
        return Err(ReportError::Spec("periods must be a nonempty list of positive counts".into()));
    }
    if spec.grid.is_none() && spec.random.is_none() {
        return Err(ReportError::Spec("neither a grid nor a random block is given".into()));
    }
    let mut runs = Vec::new();
    for &periods in &spec.periods {
        let cfg = spec.scenario.clone().with_periods(periods);
        if let Some(g) = &spec.grid {
            runs.push(Run {
                periods,
                kind: InstanceType::Grid,
                label: format!("grid T={periods}"),
                instance: gen_grid(g.sensor_rows, g.sensor_cols, g.dp_rows, g.dp_cols, g.area, &cfg)?,
            });
        }
        if let Some(r) = &spec.random {
            if r.seeds.is_empty() {
                return Err(ReportError::Spec("random block lists no seeds".into()));
            }
            for &seed in &r.seeds {
                runs.push(Run {
                    periods,
                    kind: InstanceType::Random,
                    label: format!("random T={periods} seed={seed}"),
                    instance: gen_random(r.sensors, r.demand_points, r.area, seed, &cfg)?,
                });
            }
        }
    }

    let results: Vec<(Metrics, f64)> = runs
        .par_iter()
        .map(|run| solve_one(spec, run).map(|(sol, m)| (m, sol.wall_time_s)))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for &periods in &spec.periods {
        for kind in [InstanceType::Grid, InstanceType::Random] {
            let cell: Vec<&(Metrics, f64)> = runs
                .iter()
                .zip(&results)
                .filter(|(r, _)| r.periods == periods && r.kind == kind)
                .map(|(_, m)| m)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let pick = |f: &dyn Fn(&(Metrics, f64)) -> f64| {
                mean_std(&cell.iter().map(|m| f(m)).collect::<Vec<_>>())
            };
            let (objective_mean, objective_std) = pick(&|m| m.0.objective);
            let (real_objective_mean, real_objective_std) = pick(&|m| m.0.real_objective);
            let (uncovered_rate_mean, uncovered_rate_std) = pick(&|m| m.0.uncovered_rate);
            let (time_mean_s, time_std_s) = pick(&|m| m.1);
            rows.push(ExperimentRow {
                periods,
                instance_type: kind,
                objective_mean,
                objective_std,
                real_objective_mean,
                real_objective_std,
                uncovered_rate_mean,
                uncovered_rate_std,
                time_mean_s,
                time_std_s,
                n_instances: cell.len(),
            });
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[ExperimentRow]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        return Ok(format!("{CSV_HEADER}\n"));
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_csv(text: &str) -> Result<Vec<ExperimentRow>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(ReportError::Spec(format!("unexpected csv header {header:?}")));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_std() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
        assert_eq!(mean_std(&[0.1, 0.1, 0.1]), (0.1, 0.0));
    }

    #[test]
    fn csv_header_is_exact() {
        let row = ExperimentRow {
            periods: 1,
            instance_type: InstanceType::Grid,
            objective_mean: 1.5,
            objective_std: 0.0,
            real_objective_mean: 1.5,
            real_objective_std: 0.0,
            uncovered_rate_mean: 0.0,
            uncovered_rate_std: 0.0,
            time_mean_s: 0.25,
            time_std_s: 0.0,
            n_instances: 1,
        };
        let text = to_csv(std::slice::from_ref(&row)).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().nth(1).unwrap(), "1,grid,1.5,0.0,1.5,0.0,0.0,0.0,0.25,0.0,1");
        assert_eq!(parse_csv(&text).unwrap(), vec![row]);
        assert_eq!(to_csv(&[]).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ExperimentSpec::paper_shaped(vec![1, 2]);
        assert_eq!(ExperimentSpec::from_json(&spec.to_json()).unwrap(), spec);
    }
}
