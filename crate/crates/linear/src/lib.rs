//! Effective linearized problem about a current-vortex sheet: basic states,
//! the good unknown, coefficient assembly in the characteristic variables,
//! time integration with front coupling, constraint monitors, boundary
//! homogenization and the energy ledger.

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod basic;
pub mod constraints;
pub mod effective;
pub mod energy;
pub mod front;
pub mod good_unknown;
pub mod homogenize;
pub mod solver;

pub use basic::{BasicSnapshot, BasicState, ManufacturedBasic, ValidationTolerances};
pub use solver::{FnForcing, Forcing, LinearSolver, LinearState, SampledForcing, SolverConfig, Trajectory, ZeroForcing};
pub use energy::{energy_ledger, verify_apriori, AprioriReport, EnergyLedger, LedgerRow};
pub use constraints::{constraint_monitor, solve_constraint_transport, ConstraintSeries};
pub use front::{reconstruct_front_derivatives, FrontReconstruction};
pub use homogenize::{homogenize_boundary, BoundaryData, Homogenized, LiftProfile};
