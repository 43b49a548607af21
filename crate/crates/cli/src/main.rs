use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use wsn_sched::instance::{Area, Phenomenon, Point2D, ScenarioConfig, SinkLayout};
use wsn_sched::report::{self, ExperimentSpec};
use wsn_sched::solve::{import_external, SolveError};
use wsn_sched::validate::{check_routes, ValidateError};
use wsn_sched::{
    brute_force_oracle, build_arcs, build_model, check_feasibility, evaluate, export_lp, gen_grid,
    gen_random, solve_exact, solve_heuristic, Instance, OracleCaps, Solution, SolveConfig,
};

const STATS_FORMAT: &str = "wsn-model-stats/1";

#[derive(Parser)]
#[command(name = "wsn", version, about = "Energy-aware coverage and routing schedules for sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Write the integer program of an instance in LP format.
    Build(BuildArgs),
    /// Solve an instance and report its metrics.
    Solve(SolveArgs),
    /// Check a solution (JSON or `name = value` lines) against an instance.
    Validate(ValidateArgs),
    /// Draw activation and routing diagrams as SVG.
    Render(RenderArgs),
    /// Run an experiment spec and write the aggregated CSV.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Sensors and demand points on regular lattices.
    Grid {
        #[arg(long, default_value_t = 4)]
        sensor_rows: usize,
        #[arg(long, default_value_t = 4)]
        sensor_cols: usize,
        #[arg(long, default_value_t = 10)]
        dp_rows: usize,
        #[arg(long, default_value_t = 10)]
        dp_cols: usize,
        /// Lattice margin in meters; by default points are centered in their cells.
        #[arg(long)]
        margin: Option<f64>,
        #[command(flatten)]
        common: GenArgs,
    },
    /// Sensors and demand points drawn uniformly over the area.
    Random {
        #[arg(long, default_value_t = 16)]
        sensors: usize,
        #[arg(long, default_value_t = 100)]
        demand_points: usize,
        #[command(flatten)]
        common: GenArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SinkKind {
    Center,
    Corners,
    Coords,
}

#[derive(Args)]
struct GenArgs {
    /// Start from the 10 m field (1) or the 30 m corner-sink routing field (2).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    paper_scenario: Option<u8>,
    #[arg(long, default_value_t = 1)]
    periods: usize,
    /// Period length in minutes.
    #[arg(long)]
    period_length: Option<f64>,
    /// Field width in meters.
    #[arg(long)]
    width: Option<f64>,
    /// Field height in meters.
    #[arg(long)]
    height: Option<f64>,
    /// Coverage radius per phenomenon in meters, comma separated.
    #[arg(long, value_delimiter = ',')]
    radii: Vec<f64>,
    /// Samples per minute per phenomenon, comma separated.
    #[arg(long, value_delimiter = ',')]
    rates: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    bits_per_sample: u32,
    /// Radio range in meters.
    #[arg(long)]
    comm_radius: Option<f64>,
    #[arg(long, value_enum)]
    sinks: Option<SinkKind>,
    /// Sink position `x,y` in meters; repeat for several sinks (with --sinks coords).
    #[arg(long = "sink", value_parser = parse_point)]
    sink_coords: Vec<Point2D>,
    #[arg(long)]
    battery: Option<f64>,
    /// Penalty per uncovered demand point and period (all phenomena).
    #[arg(long)]
    uncovered_penalty: Option<f64>,
    /// Penalty per sensing sensor and period (all phenomena).
    #[arg(long)]
    activation_penalty: Option<f64>,
    /// Probability of dropping each (demand point, phenomenon) demand.
    #[arg(long)]
    demand_drop: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    instance: PathBuf,
    #[arg(long)]
    lp: PathBuf,
    /// Variable and constraint counts as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    Exact,
    Heuristic,
    Oracle,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Heuristic)]
    method: Method,
    /// Wall-clock limit of the exact search in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Heuristic tie-break seed; 0 keeps sensor order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    instance: PathBuf,
    solution: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    instance: PathBuf,
    solution: PathBuf,
    /// Period to draw; every period when omitted.
    #[arg(long)]
    period: Option<usize>,
    /// Phenomenon index to draw; every phenomenon when omitted.
    #[arg(long)]
    phenomenon: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec JSON.
    #[arg(required_unless_present = "paper_shaped")]
    spec: Option<PathBuf>,
    /// Grid and ten random seeds over these period counts with the heuristic.
    #[arg(long, value_delimiter = ',', conflicts_with = "spec")]
    paper_shaped: Option<Vec<usize>>,
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn invalid(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn parse_point(s: &str) -> Result<Point2D, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Point2D::new(num(x)?, num(y)?))
}

/// Writes through a temporary file in the target directory so a failed run
/// never leaves a partial artifact behind.
fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(usage)
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    Instance::from_json(&read(path)?).with_context(|| format!("malformed instance {}", path.display())).map_err(usage)
}

fn read_solution(path: &Path, instance: &Instance) -> Result<Solution, Failure> {
    let text = read(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        Solution::from_json(&text)
    } else {
        import_external(&text, instance.n_sensors())
    };
    parsed.with_context(|| format!("malformed solution {}", path.display())).map_err(usage)
}

fn scenario(common: &GenArgs) -> anyhow::Result<(ScenarioConfig, Area)> {
    let (mut cfg, mut area) = match common.paper_scenario {
        Some(2) => (ScenarioConfig::paper_routing(), Area::new(30.0, 30.0)),
        _ => (ScenarioConfig::paper(), Area::new(10.0, 10.0)),
    };
    cfg.periods = common.periods;
    cfg.seed = common.seed;
    if let Some(w) = common.width {
        area.width = w;
    }
    if let Some(h) = common.height {
        area.height = h;
    }
    if !common.radii.is_empty() || !common.rates.is_empty() {
        let n = common.radii.len().max(common.rates.len());
        let pick = |v: &[f64], g: usize, fallback: f64| v.get(g).copied().unwrap_or(fallback);
        if (!common.radii.is_empty() && common.radii.len() != n) || (!common.rates.is_empty() && common.rates.len() != n) {
            return Err(anyhow!("--radii and --rates must list the same number of phenomena"));
        }
        cfg.phenomena = (0..n)
            .map(|g| {
                let base = cfg.phenomena.get(g).or(cfg.phenomena.last()).expect("presets have phenomena");
                Phenomenon::new(
                    g as u32 + 1,
                    pick(&common.radii, g, base.coverage_radius),
                    pick(&common.rates, g, base.sampling_rate),
                    common.bits_per_sample,
                )
            })
            .collect();
    } else {
        for p in &mut cfg.phenomena {
            p.bits_per_sample = common.bits_per_sample;
        }
    }
    if let Some(m) = common.period_length {
        cfg.period_length_min = m;
    }
    if let Some(r) = common.comm_radius {
        cfg.comm_radius_m = r;
    }
    match common.sinks {
        Some(SinkKind::Center) => cfg.sinks = SinkLayout::Center,
        Some(SinkKind::Corners) => cfg.sinks = SinkLayout::Corners,
        Some(SinkKind::Coords) | None if !common.sink_coords.is_empty() => {
            cfg.sinks = SinkLayout::Coords(common.sink_coords.clone())
        }
        Some(SinkKind::Coords) => return Err(anyhow!("--sinks coords needs at least one --sink x,y")),
        None => {}
    }
    if let Some(b) = common.battery {
        cfg.device.battery_capacity = b;
    }
    cfg.uncovered_penalty = common.uncovered_penalty.or(cfg.uncovered_penalty);
    if let Some(p) = common.activation_penalty {
        cfg.activation_penalty = p;
    }
    if let Some(d) = common.demand_drop {
        cfg.demand_drop_fraction = d;
    }
    Ok((cfg, area))
}

fn cmd_gen(command: GenCommand) -> Result<(), Failure> {
    let (instance, out) = match command {
        GenCommand::Grid { sensor_rows, sensor_cols, dp_rows, dp_cols, margin, common } => {
            let (mut cfg, area) = scenario(&common).map_err(usage)?;
            cfg.margin = margin.or(cfg.margin);
            let inst = gen_grid(sensor_rows, sensor_cols, dp_rows, dp_cols, area, &cfg).map_err(usage)?;
            (inst, common.out)
        }
        GenCommand::Random { sensors, demand_points, common } => {
            let (cfg, area) = scenario(&common).map_err(usage)?;
            let inst = gen_random(sensors, demand_points, area, common.seed, &cfg).map_err(usage)?;
            (inst, common.out)
        }
    };
    write_atomic(&out, &instance.to_json()).map_err(usage)?;
    println!(
        "{}: {} sensors, {} demand points, {} sinks, {} phenomena, {} periods",
        out.display(),
        instance.n_sensors(),
        instance.n_demand_points(),
        instance.n_sinks(),
        instance.n_phenomena(),
        instance.periods
    );
    Ok(())
}

fn cmd_build(args: BuildArgs) -> Result<(), Failure> {
    let inst = read_instance(&args.instance)?;
    let model = build_model(&inst, &build_arcs(&inst)).map_err(usage)?;
    let stats = model.stats();
    write_atomic(&args.lp, &export_lp(&model)).map_err(usage)?;
    if let Some(path) = &args.stats {
        let mut json = serde_json::to_value(&stats).expect("stats serialize");
        json["format"] = STATS_FORMAT.into();
        write_atomic(path, &(serde_json::to_string_pretty(&json).expect("json") + "\n")).map_err(usage)?;
    }
    println!(
        "{}: {} variables ({} binary), {} constraints",
        args.lp.display(),
        stats.total_variables,
        stats.binary_variables,
        stats.total_constraints
    );
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let inst = read_instance(&args.instance)?;
    let arcs = build_arcs(&inst);
    let mut config = SolveConfig {
        time_limit_s: args.time_limit,
        seed: args.seed,
        ..SolveConfig::default()
    };
    if let Some(n) = args.node_limit {
        config.node_limit = n;
    }
    let mut certified = None;
    let solution = match args.method {
        Method::Heuristic => solve_heuristic(&inst, &arcs, &config).map_err(usage)?,
        Method::Exact => {
            let model = build_model(&inst, &arcs).map_err(usage)?;
            let out = solve_exact(&inst, &arcs, &model, &config).map_err(usage)?;
            certified = Some(out.certified);
            out.solution
        }
        Method::Oracle => {
            let model = build_model(&inst, &arcs).map_err(usage)?;
            match brute_force_oracle(&inst, &arcs, &model, OracleCaps::default()) {
                Ok(Some(sol)) => sol,
                Ok(None) => return Err(invalid(anyhow!("the model has no feasible assignment"))),
                Err(e @ SolveError::OverCap { .. }) => return Err(usage(e)),
                Err(e) => return Err(invalid(e)),
            }
        }
    };
    let violations = check_feasibility(&inst, &arcs, &solution).map_err(invalid)?;
    if let Some(v) = violations.first() {
        return Err(invalid(anyhow!("solver output violates {} ({} rows)", v.constraint, violations.len())));
    }
    let metrics = evaluate(&inst, &arcs, &solution).map_err(invalid)?;
    if let Some(path) = &args.out {
        write_atomic(path, &(solution.to_json() + "\n")).map_err(usage)?;
    }
    println!("objective={}", metrics.objective);
    println!("real_objective={}", metrics.real_objective);
    println!("uncovered_rate={}", metrics.uncovered_rate);
    println!("time_s={:.3}", solution.wall_time_s);
    if let Some(c) = certified {
        println!("certificate={c}");
        if !c {
            return Err(Failure {
                code: 3,
                error: anyhow!("search stopped at its limits; the solution is feasible but not proven optimal"),
            });
        }
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let inst = read_instance(&args.instance)?;
    let sol = read_solution(&args.solution, &inst)?;
    let arcs = build_arcs(&inst);
    let violations = match check_feasibility(&inst, &arcs, &sol) {
        Ok(v) => v,
        Err(e @ (ValidateError::UnknownIndex(_) | ValidateError::EnergyLength { .. })) => return Err(invalid(e)),
        Err(e) => return Err(usage(e)),
    };
    for v in &violations {
        println!("violated {}: lhs {} {} {} (slack {})", v.constraint, v.lhs, v.sense, v.rhs, v.slack);
    }
    let issues = check_routes(&inst, &arcs, &sol).map_err(invalid)?;
    for issue in &issues {
        println!("route: {}", issue.message);
    }
    if !violations.is_empty() || !issues.is_empty() {
        return Err(invalid(anyhow!(
            "{} violated constraints, {} unrouted commodities",
            violations.len(),
            issues.len()
        )));
    }
    let m = evaluate(&inst, &arcs, &sol).map_err(invalid)?;
    println!("feasible");
    println!("objective={}", m.objective);
    println!("real_objective={}", m.real_objective);
    println!("uncovered_rate={}", m.uncovered_rate);
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<(), Failure> {
    let inst = read_instance(&args.instance)?;
    let sol = read_solution(&args.solution, &inst)?;
    let periods: Vec<usize> = args.period.map_or_else(|| (0..inst.periods).collect(), |t| vec![t]);
    let phens: Vec<usize> = args.phenomenon.map_or_else(|| (0..inst.n_phenomena()).collect(), |g| vec![g]);
    let mut docs = Vec::new();
    for &t in &periods {
        for &g in &phens {
            docs.push((report::plan_file_name(t, g), report::render_schedule(&inst, &sol, t, g).map_err(usage)?));
            docs.push((report::routes_file_name(t, g), report::render_routes(&inst, &sol, t, g).map_err(usage)?));
        }
    }
    fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display())).map_err(usage)?;
    for (name, doc) in &docs {
        write_atomic(&args.out_dir.join(name), doc).map_err(usage)?;
    }
    println!("{} files in {}", docs.len(), args.out_dir.display());
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Failure> {
    let spec = match (&args.spec, args.paper_shaped) {
        (Some(path), _) => ExperimentSpec::from_json(&read(path)?).map_err(usage)?,
        (None, Some(periods)) => ExperimentSpec::paper_shaped(periods),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let rows = report::run_experiment(&spec).map_err(|e| match e {
        report::ReportError::Spec(_) | report::ReportError::Instance(_) => usage(e),
        other => invalid(other),
    })?;
    let csv = report::to_csv(&rows).map_err(usage)?;
    write_atomic(&args.out, &csv).map_err(usage)?;
    print!("{csv}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(c) => cmd_gen(c),
        Command::Build(a) => cmd_build(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Render(a) => cmd_render(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
