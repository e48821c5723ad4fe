pub mod cli;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod linalg;
pub mod model;
pub mod scheme;

pub use error::{Error, Result};
