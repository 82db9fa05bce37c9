//! Scenario reduction for chance-constrained optimal control of linear
//! systems with discrete additive disturbances.
//!
//! The pipeline is: generate or load a [`scenario::ScenarioSet`], reduce it
//! with [`reduction::reduce`], build deviation boxes and the cost correction
//! with [`guarantees::GuaranteePackage`], then assemble and solve the control
//! problem as an MILP through [`ocp`]. [`evaluation`] scores inputs against
//! the full scenario set and runs parameter sweeps.

pub mod config;
pub mod dynamics;
mod error;
pub mod evaluation;
pub mod guarantees;
pub mod milp;
pub mod ocp;
pub mod reduction;
pub mod scenario;

pub use error::{Error, Result};
