//! Stationary planar Boolean models: simulation, exact measurement of
//! intrinsic volumes, mean-value and covariance theory, and CLT diagnostics.

pub mod covariance;
pub mod error;
pub mod grain;
pub mod limit;
pub mod moments;
pub mod parallel;
pub mod process;
pub mod quad;
pub mod union;

pub use error::{Error, Result};
pub use grain::{GrainShape, IntrinsicVolumes2D, ShapeKind, Vec2};
pub use union::{FunctionalVector, PlacedGrain, Window};
