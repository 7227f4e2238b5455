pub mod error;
pub mod functionals;
pub mod indefinite_space;
pub mod runner;
pub mod solver;
pub mod spectral_basis;
pub mod theory;

pub use error::{Error, Result};
