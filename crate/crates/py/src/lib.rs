//! Python bindings: instances, solvers, validation and rendering.

#[pyo3::pymodule]
mod wsn_sched_py {
    use pyo3::exceptions::{PyRuntimeError, PyValueError};
    use pyo3::prelude::*;
    use pyo3::types::PyDict;
    use wsn_sched::instance::{Area, ScenarioConfig};
    use wsn_sched::report;
    use wsn_sched::solve::SolveError;
    use wsn_sched::validate::check_routes;

    fn value_err(e: impl std::fmt::Display) -> PyErr {
        PyValueError::new_err(e.to_string())
    }

    fn runtime_err(e: impl std::fmt::Display) -> PyErr {
        PyRuntimeError::new_err(e.to_string())
    }

    #[pyclass(frozen, name = "Instance", module = "wsn_sched_py")]
    struct Instance(wsn_sched::Instance);

    #[pymethods]
    impl Instance {
        /// The 10 m field (1) or the 30 m corner-sink field (2).
        #[staticmethod]
        #[pyo3(signature = (scenario, periods = 1))]
        fn paper_scenario(scenario: u8, periods: usize) -> PyResult<Self> {
            wsn_sched::paper_scenario(scenario, periods).map(Self).map_err(value_err)
        }

        #[staticmethod]
        #[pyo3(signature = (sensor_rows = 4, sensor_cols = 4, dp_rows = 10, dp_cols = 10, width = 10.0, height = 10.0, periods = 1))]
        fn grid(
            sensor_rows: usize,
            sensor_cols: usize,
            dp_rows: usize,
            dp_cols: usize,
            width: f64,
            height: f64,
            periods: usize,
        ) -> PyResult<Self> {
            let cfg = ScenarioConfig::paper().with_periods(periods);
            wsn_sched::gen_grid(sensor_rows, sensor_cols, dp_rows, dp_cols, Area::new(width, height), &cfg)
                .map(Self)
                .map_err(value_err)
        }

        #[staticmethod]
        #[pyo3(signature = (sensors = 16, demand_points = 100, width = 10.0, height = 10.0, seed = 0, periods = 1))]
        fn random(
            sensors: usize,
            demand_points: usize,
            width: f64,
            height: f64,
            seed: u64,
            periods: usize,
        ) -> PyResult<Self> {
            let cfg = ScenarioConfig::paper().with_periods(periods);
            wsn_sched::gen_random(sensors, demand_points, Area::new(width, height), seed, &cfg)
                .map(Self)
                .map_err(value_err)
        }

        #[staticmethod]
        fn from_json(text: &str) -> PyResult<Self> {
            wsn_sched::Instance::from_json(text).map(Self).map_err(value_err)
        }

        fn to_json(&self) -> String {
            self.0.to_json()
        }

        #[getter]
        fn n_sensors(&self) -> usize {
            self.0.n_sensors()
        }

        #[getter]
        fn n_demand_points(&self) -> usize {
            self.0.n_demand_points()
        }

        #[getter]
        fn n_sinks(&self) -> usize {
            self.0.n_sinks()
        }

        #[getter]
        fn n_phenomena(&self) -> usize {
            self.0.n_phenomena()
        }

        #[getter]
        fn periods(&self) -> usize {
            self.0.periods
        }

        /// The integer program in LP format.
        fn to_lp(&self) -> PyResult<String> {
            let model = wsn_sched::build_model(&self.0, &wsn_sched::build_arcs(&self.0)).map_err(value_err)?;
            Ok(wsn_sched::export_lp(&model))
        }

        /// Variable and constraint counts per family.
        fn model_stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
            let model = wsn_sched::build_model(&self.0, &wsn_sched::build_arcs(&self.0)).map_err(value_err)?;
            let stats = model.stats();
            let d = PyDict::new(py);
            d.set_item("variables", stats.variables)?;
            d.set_item("constraints", stats.constraints)?;
            d.set_item("total_variables", stats.total_variables)?;
            d.set_item("binary_variables", stats.binary_variables)?;
            d.set_item("total_constraints", stats.total_constraints)?;
            Ok(d)
        }

        fn __repr__(&self) -> String {
            format!(
                "Instance(sensors={}, demand_points={}, sinks={}, phenomena={}, periods={})",
                self.0.n_sensors(),
                self.0.n_demand_points(),
                self.0.n_sinks(),
                self.0.n_phenomena(),
                self.0.periods
            )
        }
    }

    #[pyclass(frozen, name = "Solution", module = "wsn_sched_py")]
    struct Solution(wsn_sched::Solution);

    #[pymethods]
    impl Solution {
        #[staticmethod]
        fn from_json(text: &str) -> PyResult<Self> {
            wsn_sched::Solution::from_json(text).map(Self).map_err(value_err)
        }

        /// Reads `name = value` lines from an external solver.
        #[staticmethod]
        fn from_external(text: &str, instance: &Instance) -> PyResult<Self> {
            wsn_sched::solve::import_external(text, instance.0.n_sensors())
                .map(Self)
                .map_err(value_err)
        }

        fn to_json(&self) -> String {
            self.0.to_json()
        }

        /// Names of the binary variables set to one.
        #[getter]
        fn ones(&self) -> Vec<String> {
            self.0.ones.iter().map(|v| v.to_string()).collect()
        }

        #[getter]
        fn energy(&self) -> Vec<f64> {
            self.0.energy.clone()
        }

        #[getter]
        fn wall_time_s(&self) -> f64 {
            self.0.wall_time_s
        }

        fn __repr__(&self) -> String {
            format!("Solution(ones={}, provenance={:?})", self.0.ones.len(), self.0.provenance)
        }
    }

    /// Solves with "heuristic", "exact" or "oracle". Returns the solution and,
    /// for the exact search, whether it was proven optimal.
    #[pyfunction]
    #[pyo3(signature = (instance, method = "heuristic", time_limit = 60.0, node_limit = None, seed = 0))]
    fn solve(
        py: Python<'_>,
        instance: &Instance,
        method: &str,
        time_limit: f64,
        node_limit: Option<u64>,
        seed: u64,
    ) -> PyResult<(Solution, Option<bool>)> {
        let mut config = wsn_sched::SolveConfig {
            time_limit_s: time_limit,
            seed,
            ..Default::default()
        };
        if let Some(n) = node_limit {
            config.node_limit = n;
        }
        let inst = &instance.0;
        let result = py.detach(|| -> Result<(wsn_sched::Solution, Option<bool>), SolveError> {
            let arcs = wsn_sched::build_arcs(inst);
            match method {
                "heuristic" => Ok((wsn_sched::solve_heuristic(inst, &arcs, &config)?, None)),
                "exact" => {
                    let model = wsn_sched::build_model(inst, &arcs).map_err(|e| SolveError::ModelMismatch(e.to_string()))?;
                    let out = wsn_sched::solve_exact(inst, &arcs, &model, &config)?;
                    Ok((out.solution, Some(out.certified)))
                }
                "oracle" => {
                    let model = wsn_sched::build_model(inst, &arcs).map_err(|e| SolveError::ModelMismatch(e.to_string()))?;
                    let sol = wsn_sched::brute_force_oracle(inst, &arcs, &model, wsn_sched::OracleCaps::default())?
                        .ok_or_else(|| SolveError::Rejected("no feasible assignment".into()))?;
                    Ok((sol, None))
                }
                other => Err(SolveError::Unsupported(format!("unknown method {other:?}"))),
            }
        });
        match result {
            Ok((sol, certified)) => Ok((Solution(sol), certified)),
            Err(e @ (SolveError::OverCap { .. } | SolveError::Unsupported(_))) => Err(value_err(e)),
            Err(e) => Err(runtime_err(e)),
        }
    }

    /// Violated constraint rows, each as a dict; empty when feasible.
    #[pyfunction]
    fn check_feasibility<'py>(
        py: Python<'py>,
        instance: &Instance,
        solution: &Solution,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let arcs = wsn_sched::build_arcs(&instance.0);
        let violations = wsn_sched::check_feasibility(&instance.0, &arcs, &solution.0).map_err(value_err)?;
        violations
            .into_iter()
            .map(|v| {
                let d = PyDict::new(py);
                d.set_item("constraint", v.constraint)?;
                d.set_item("family", v.family)?;
                d.set_item("lhs", v.lhs)?;
                d.set_item("sense", v.sense.symbol())?;
                d.set_item("rhs", v.rhs)?;
                d.set_item("slack", v.slack)?;
                Ok(d)
            })
            .collect()
    }

    /// Sensing commodities that have no powered path to a sink.
    #[pyfunction]
    fn unrouted(instance: &Instance, solution: &Solution) -> PyResult<Vec<String>> {
        let arcs = wsn_sched::build_arcs(&instance.0);
        let issues = check_routes(&instance.0, &arcs, &solution.0).map_err(value_err)?;
        Ok(issues.into_iter().map(|i| i.message).collect())
    }

    /// Objective, real objective, uncovered rate and per-sensor energy of a
    /// feasible solution.
    #[pyfunction]
    fn evaluate<'py>(py: Python<'py>, instance: &Instance, solution: &Solution) -> PyResult<Bound<'py, PyDict>> {
        let arcs = wsn_sched::build_arcs(&instance.0);
        let m = wsn_sched::evaluate(&instance.0, &arcs, &solution.0).map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("objective", m.objective)?;
        d.set_item("real_objective", m.real_objective)?;
        d.set_item("penalty_total", m.penalty_total)?;
        d.set_item("uncovered", m.uncovered)?;
        d.set_item("demanded", m.demanded)?;
        d.set_item("uncovered_rate", m.uncovered_rate)?;
        d.set_item("per_sensor_energy", m.per_sensor_energy)?;
        d.set_item("activations", m.activations)?;
        d.set_item("sensing_events", m.sensing_events)?;
        d.set_item("on_sensor_periods", m.on_sensor_periods)?;
        Ok(d)
    }

    #[pyfunction]
    fn render_schedule(instance: &Instance, solution: &Solution, period: usize, phenomenon: usize) -> PyResult<String> {
        report::render_schedule(&instance.0, &solution.0, period, phenomenon).map_err(value_err)
    }

    #[pyfunction]
    fn render_routes(instance: &Instance, solution: &Solution, period: usize, phenomenon: usize) -> PyResult<String> {
        report::render_routes(&instance.0, &solution.0, period, phenomenon).map_err(value_err)
    }

    /// Runs an experiment spec (JSON text) and returns the CSV table.
    #[pyfunction]
    fn run_experiment(py: Python<'_>, spec: &str) -> PyResult<String> {
        let spec = report::ExperimentSpec::from_json(spec).map_err(value_err)?;
        let rows = py.detach(|| report::run_experiment(&spec)).map_err(runtime_err)?;
        report::to_csv(&rows).map_err(runtime_err)
    }
}
