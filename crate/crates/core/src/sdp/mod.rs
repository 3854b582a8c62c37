//! The semidefinite relaxation, its solver and solution handling.

mod problem;
mod solution;
mod solver;

pub use problem::{build_problem, ConstraintTally, SdpProblem};
pub use solution::{
    extract_vectors, feasibility_report, indicator_gram, read_solution, write_solution, FeasibilityReport, Residuals,
    SdpSolution, SolveStats,
};
pub use solver::{solve, solve_with, SolverOptions};
