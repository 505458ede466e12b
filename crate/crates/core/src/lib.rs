pub mod error;
pub mod fespace;
pub mod forms;
pub mod functions;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod study;

pub use error::{Error, Result};
