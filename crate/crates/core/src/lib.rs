//! Numerical comparison geometry for manifolds with boundary: model
//! half-planes, open triangles, Jacobi fields, warped-product test
//! manifolds and batch verification of the comparison inequalities.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod format;
pub mod jacobi;
pub mod manifold;
pub mod model_surface;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod triangle;
pub mod verify;
pub mod warping;

pub use error::{Error, Result};
