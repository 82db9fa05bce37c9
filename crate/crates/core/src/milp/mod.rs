//! A small mixed-integer LP solver: bounded primal simplex plus best-first
//! branch and bound over binaries.

mod bnb;
mod lp_format;
mod model;
mod simplex;

pub use bnb::{solve_milp, MilpOptions, MilpResult, MilpStatus, NodeRecord};
pub use lp_format::{read_lp, write_lp};
pub use model::{Constraint, MilpModel, Sense};
pub use simplex::{solve_lp, solve_lp_bounded, Basis, LpOptions, LpResult, LpStatus};
