//! Regularization by projection for linear first-kind integral equations
//! `Au = f` on `[0, 1]` in `L^p` and `C` settings.

pub mod error;
pub mod function;
pub mod quadrature;
pub mod spaces;
pub mod splines;
pub mod operators;
pub mod solvers;
pub mod rules;
pub mod stability;
pub mod harness;

pub use error::{Error, Result};
pub use function::Function1D;
pub use spaces::{SampledFunction, SpaceSpec};
pub use splines::{Mesh, PiecewisePoly};
