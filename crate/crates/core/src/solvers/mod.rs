//! Small dense combinatorial and LP kernels.

mod hungarian;
mod simplex;

pub use hungarian::{hungarian_max, Assignment};
pub use simplex::{simplex_solve, LinearProgram, LpSolution, LpStatus, MAX_PIVOTS};
