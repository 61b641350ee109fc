//! Exact computational checks for contractibility of Vietoris–Rips complexes
//! of dense subsets of (ℝⁿ, ℓ₁).
//!
//! Everything is exact rational arithmetic. The crate builds open VR
//! complexes, computes their homology over the two-element field and strong
//! collapses, embeds ℓ₁ isometrically into ℓ∞, computes the homology of the
//! ℓ∞ neighborhood of the embedded set independently through a cubical
//! model, and certifies the straight-line retraction of that neighborhood
//! onto the image hyperplane in the three-dimensional case.

pub mod boxunion;
pub mod density;
pub mod embeddings;
pub mod error;
pub mod experiments;
pub mod homology;
pub mod metric;
pub mod pointfile;
pub mod retraction;
pub mod rips;
pub mod scalar;

pub use error::{Error, Result};
pub use metric::{Metric, Point, PointSet};
pub use scalar::Scalar;
