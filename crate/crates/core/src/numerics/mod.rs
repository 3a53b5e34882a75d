//! Stateless numerical primitives shared by the solvers.

mod line_search;
mod prox;
mod psd;
mod simplex;
mod simplex_ls;

pub use line_search::{backtracking_step, LineSearchConfig, StepOutcome};
pub use prox::{l21_norm_rows, prox_l21_row, prox_l21_row_scaled, prox_l21_rows};
pub use psd::{project_psd, symmetric_eigenvalues_desc};
pub use simplex::project_simplex;
pub use simplex_ls::{solve_simplex_ls, SimplexLsSolution, SimplexQPProblem};
