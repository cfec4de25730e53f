//! Offline benchmark: the Nash-welfare optimum of a whole instance.

mod brute_force;
mod eg;

pub use brute_force::{brute_force_oracle, grid_error_bound, grid_size, MAX_GRID_POINTS};
pub use eg::{solve_eg, solve_eg_from, EgOptions, EgSolution, StepRule};
