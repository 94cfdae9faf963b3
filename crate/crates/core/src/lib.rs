//! Spectral discretization of `(∂_t² + χ∂_t + |D|^α)u = 0` on the circle:
//! quadratic eigenvalues, resolvent norms, time stepping and commutator
//! estimates.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commutator;
pub mod damping;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod parallel;
pub mod qevp;
pub mod resolvent;
pub mod spectral;
pub mod timedomain;

pub use error::{Error, Result};
