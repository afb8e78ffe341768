//! One-dimensional Lippmann–Schwinger scattering: Nyström discretization,
//! Born (Neumann) series with convergence monitoring and rate estimates,
//! the analytic eigenvalue locus of the constant-medium operator, and a
//! complex relaxation preconditioner that restores convergence of the series
//! outside the weak-scattering regime.

// Negated comparisons are how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod born;
pub mod error;
pub mod io;
pub mod lippmann;
pub mod numerics;
pub mod precond;
pub mod problem;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
