//! Smooth approximation of Sobolev functions on a decomposed domain:
//! moment-matching polynomials on Whitney cubes, a partition of unity
//! subordinate to the core/tentacle pieces, and the glued approximant.

pub mod approx;
pub mod field;
pub mod jet;
pub mod partition;
pub mod poly;
pub mod quadrature;

pub use approx::{allowed_cells, approximate, assemble, error_decay, fit_polynomials, growth_slope, ApproxReport, Approximation, DecayReport, DecayRow, DecaySweep};
pub use field::{singular_exponent, Field, FieldSum, PowerSingularity, Wave, WorldPolynomial};
pub use jet::Jet;
pub use partition::{HatKind, PartitionOfUnity};
pub use poly::{fit_on_cube, fit_polynomial, polynomial_estimates_check, EstimatesReport, PolyApprox};
pub use quadrature::{seminorm, DerivativeMass};
