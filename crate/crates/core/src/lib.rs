//! Constrained optimization with the porcellio scaber algorithm (PSA).
//!
//! Constraints `g_j(x) <= 0` are folded into the cost with a quadratic
//! penalty, simple bounds and grids are enforced by projection, and the
//! swarm update follows the aggregation/exploration rule in [`engine`].
//!
//! ```
//! use psa_core::{benchmarks, engine::{solve, SolverConfig}};
//!
//! let problem = benchmarks::himmelblau();
//! let config = SolverConfig::default().with_max_steps(200).with_seed(7);
//! let result = solve(&problem, &config).unwrap();
//! assert_eq!(result.best_x.len(), 5);
//! ```

pub mod batch;
pub mod benchmarks;
pub mod dsl;
pub mod engine;
mod error;
pub mod problem;
pub mod projection;
pub mod report;

use std::path::Path;

pub use error::{Error, EvalError, Result};
pub use problem::{
    evaluable, evaluate_constraints, indicator, penalized_cost, split_double_sided, ConstraintReport, Evaluable,
    PenaltyParams, Problem, VariableDomain,
};

/// Resolves a built-in problem name or a path to a `.cop` file.
pub fn load_problem(source: &str) -> Result<Problem> {
    if let Ok(p) = benchmarks::by_name(source) {
        return Ok(p);
    }
    let path = Path::new(source);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return dsl::compile_source(&text);
    }
    Err(Error::UnknownProblem(source.to_string()))
}
