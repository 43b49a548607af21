//! Energy-aware coverage and routing schedules for heterogeneous wireless
//! sensor networks.
//!
//! Sensors sense one or more phenomena (each with its own coverage radius and
//! sampling rate) at demand points over several periods, and relay the sensed
//! data to sinks. The crate builds the corresponding integer linear program,
//! solves it (exact search at desk scale, a greedy heuristic at field scale),
//! validates solutions against every constraint family independently of the
//! model builder, and renders schedules and experiment tables.

pub mod instance;
pub mod model;
pub mod network;
pub mod report;
pub mod solve;
pub mod validate;

pub use instance::{build_arcs, gen_grid, gen_random, paper_scenario, ArcSets, Instance};
pub use model::{build_model, export_lp, parse_lp, IlpModel, VarRef};
pub use solve::{
    brute_force_oracle, solve_exact, solve_heuristic, ExactOutcome, OracleCaps, Solution,
    SolveConfig,
};
pub use validate::{check_feasibility, evaluate, Metrics, Violation};
