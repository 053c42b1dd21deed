//! Numerical model spaces for contractions with defect indices (1, 1).

pub mod crofoot;
pub mod error;
pub mod families;
pub mod harmonic;
pub mod invariance;
pub mod io;
pub mod linalg;
pub mod modelspace;
pub mod symbols;
pub mod symmetry;
pub mod tolerances;

pub use error::{Error, Result};
