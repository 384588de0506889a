//! Bayesian estimation of filaments (ridges) of a regression surface on the
//! unit square.
//!
//! The surface is a tensor-product B-spline with a conjugate Gaussian prior.
//! Filaments are extracted from the posterior mean by subspace-constrained
//! mean shift, and credible sets are built from posterior draws screened by
//! sup-norm bands on the second derivatives.

pub mod bspline;
pub mod error;
pub mod field;
pub mod metrics;
pub mod posterior;
pub mod ridge;
pub mod synth;
pub mod uncertainty;

pub use error::{Error, Result};

/// A point of the plane, usually inside `[0, 1]^2`.
pub type Point = [f64; 2];

pub use bspline::{BasisSpec, KnotVector};
pub use field::{EigenFrame, Jet, ScalarField, Surface};
pub use posterior::{FittedPosterior, ModelScore, PriorSpec, Selection};
pub use ridge::{Filament, FilamentPoint, PointStatus, ScmsConfig, Seeds};
pub use uncertainty::{CredibleSpec, SupNormEstimate};
