//! Quasihyperbolic geometry on rasterized planar domains: Whitney cubes,
//! quasihyperbolic geodesics, hyperbolicity checks, the core/tentacle
//! decomposition and smooth approximation of Sobolev functions.

pub mod cellset;
pub mod core_tentacle;
pub mod error;
pub mod gallery;
pub mod grid;
pub mod pbm;
pub mod properties;
pub mod quasihyperbolic;
pub mod report;
pub mod sampling;
pub mod search;
pub mod sobolev_approx;
pub mod uniformization;
pub mod whitney;

pub use cellset::CellSet;
pub use error::{Error, Result};
pub use grid::{GridDomain, Path, Point};
