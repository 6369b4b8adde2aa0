//! LP and MILP solving: a dense simplex, branch-and-bound on top of it,
//! LP-file export and an external-solver adapter.

pub mod bnb;
pub mod external;
pub mod lp;
pub mod lpfile;

pub use bnb::{solve_milp, solve_milp_with, MilpOptions, MilpResult, MilpStatus};
pub use external::{resolve_solver_cmd, solve_external, ExternalError};
pub use lp::{solve_lp, solve_lp_bounded, LpOptions, LpSolution, LpStatus};
pub use lpfile::export_lp_text;
