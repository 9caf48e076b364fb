pub mod dirichlet;
pub mod discretize;
pub mod dtn;
pub mod error;
pub mod expr;
pub mod extension;
pub mod geometry;
pub mod linalg;
pub mod parameter;
pub mod realization;
pub mod suite;

pub use error::{Error, Result};
pub use num_complex::Complex64;
