//! Quantification transforms: standardization, monotone regression, spline bases and the
//! restriction step that combines them.

pub mod isotonic;
pub mod ispline;
pub mod nnls;
pub mod restrict;
pub mod standardize;

pub use isotonic::{weighted_isotonic, Direction};
pub use ispline::{ispline_basis, SplineBasis, SplineKnots};
pub use nnls::{nnls, weighted_least_squares, LinearFit};
pub use restrict::{project, restrict, Projection, Restricted, SplineFit};
pub use standardize::{standardize_quantification, Standardization};
