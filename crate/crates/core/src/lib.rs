//! Regime-robust hybrid high-order discretisation of the Brinkman problem
//! (Stokes-Darcy superposition) on two-dimensional polygonal meshes.

pub mod assembly;
pub mod error;
pub mod localops;
pub mod mesh;
pub mod polyspace;
pub mod verification;

pub use error::{Error, Result};
