//! Skew-product cocycles over irrational rotations of the circle and the
//! crossed product `C(T) x_alpha Z` they act on.
//!
//! The crate covers Fourier arithmetic on the circle, cocycle construction,
//! coboundary classification, crossed-product elements with the induced
//! automorphisms, the ergodicity classification built from those pieces,
//! invariant states and cohomology of systems.

pub mod classifier;
pub mod cocycle;
pub mod conjugacy;
pub mod crossed;
pub mod error;
pub mod fourier;
pub mod law;
pub mod rotation;
pub mod solver;
pub mod states;
pub mod unitary;

pub use cocycle::{CocycleSpec, GroupElement};
pub use crossed::{CpElement, GnsVector};
pub use error::{Error, Result};
pub use fourier::FourierPoly;
pub use law::CoefficientLaw;
pub use rotation::RotationNumber;
pub use unitary::UnitaryFn;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
