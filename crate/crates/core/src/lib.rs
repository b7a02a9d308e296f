//! Core objects for the 2D compressible MHD current-vortex sheet: equation of
//! state, coefficient matrices, front geometry, symmetrizer, stability
//! condition, grids and anisotropic norms.

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod eos;
pub mod error;
pub mod fd;
pub mod geometry;
pub mod grid;
pub mod inequalities;
pub mod matrices;
pub mod norms;
pub mod ramp;
pub mod state;
pub mod symmetrizer;

pub use eos::{Eos, IdealGas};
pub use error::{Error, Result};
pub use grid::{Grid, Sided, StateField};
pub use matrices::{CoeffMatrix, Mat6, Vec6};
pub use state::{PhysState, Side};
