//! Symbolic calculus for the cohomology of the classifying spaces BO and BU
//! and their iterated loop spaces: exact graded-ring arithmetic, Newton
//! polynomials and Chern character components, the Bott-periodic registry of
//! cohomology rings, generator-image map tables, the loop operator, and the
//! derivation of the universal half-integral secondary classes.

pub mod algebra;
pub mod maps;
pub mod parse;
pub mod spaces;
pub mod symfunc;
pub mod universal;
pub mod verify;
pub mod coeff;
pub mod emit;
pub mod error;

pub use error::{EngineError, Result};

/// Temporary CLI entry point placeholder.
pub fn cli_main() -> i32 {
    0
}
