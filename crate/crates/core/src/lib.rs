//! Reflected-flow numerics: tangent flows on hypersurfaces driven by
//! bounded-variation paths, and the multiplicative functional of reflected
//! Brownian motion assembled from its boundary excursions.
//!
//! Modules, bottom-up:
//!
//! - [`geometry`]: implicit hypersurfaces, normals, projections, shape operators.
//! - [`nbv`]: piecewise-constant paths, Stieltjes sums, finite approximation and
//!   the Skorokhod distance.
//! - [`flow`]: the product-formula solver and its stability estimates.
//! - [`rbm`]: reflected Brownian motion, local time and excursions.
//! - [`functional`]: the excursion product `A_{r,ε}`, its ε-ladder and rank.
//! - [`experiment`]: config-driven runs that write JSON reports and CSV tables.

pub mod error;
pub mod experiment;
pub mod flow;
pub mod functional;
pub mod geometry;
pub mod linalg;
pub mod nbv;
pub mod rbm;

pub use error::{Error, Result};
pub use geometry::{Hypersurface, Orientation, ShapeOperator, SurfaceSpec, TangentProjector};
pub use linalg::{Matrix, Vector};

/// Library version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
