//! Reissner–Mindlin plates with cavities and rigid inclusions.
//!
//! The crate meshes a plate with an optional interior defect, solves the
//! reference, cavity and rigid-inclusion problems with P1 elements, compares
//! boundary works and turns the normalized work gap into two-sided estimates of
//! the defect area.

pub mod assembly;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod material;
pub mod pipeline;
pub mod solvers;
pub mod verify;
pub mod works;

pub use error::{Error, Result};
