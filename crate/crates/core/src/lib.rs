//! Entropy-stable flux-differencing discontinuous Galerkin solver for the
//! compressible Euler equations with gravity.

pub mod cases;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod euler;
pub mod mesh;
pub mod operators;
pub mod quadrature;
pub mod run;
pub mod semidiscrete;
pub mod simulation;
pub mod time;
pub mod verify;

pub use error::{Error, Result};
