//! Spectral calculus for the Schrödinger operator L_a = −Δ + a/|x|² on ℝ^d.
//!
//! The crate samples radial functions on logarithmic grids, diagonalizes each
//! angular sector of L_a with a Hankel transform, evaluates heat and Riesz
//! kernels, and provides the numerical checks used by the `invsq` binary to
//! test kernel bounds, Hardy inequalities, Bernstein estimates and Sobolev
//! norm equivalences.

pub mod error;
pub mod grids;
pub mod kernels;
pub mod operator;
pub mod specfun;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
