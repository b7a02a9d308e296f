//! Nonlinear current-vortex sheet problem: compatible initial data,
//! approximate solutions, the smoothing operators and the Nash-Moser
//! iteration built on the linearized solver.

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod operator;
pub mod spacetime;
pub mod compat;
pub mod smoothing;
pub mod nash_moser;
