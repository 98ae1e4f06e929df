pub mod algebra;
pub mod calculus;
pub mod cli;
pub mod diffiety;
pub mod error;
pub mod linalg;
pub mod poly;
pub mod spectral;

pub use error::{Error, Result};
