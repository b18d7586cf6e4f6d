//! Local Lagrange bases for zonal kernels on the 2-sphere, their stability
//! constants, Gram-matrix inverse certificates, and the L2 projector.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod experiment;
pub mod geometry;
pub mod gram;
pub mod kernel;
pub mod lagrange;
pub mod linalg;
pub mod projector;
pub mod pvalue;
pub mod quadrature;
pub mod stability;

pub use error::{Error, Result};
