pub mod catalog;
pub mod cli;
pub mod decompose;
pub mod error;
pub mod io;
pub mod linalg;
pub mod quantum;
pub mod random;
pub mod resources;
pub mod runtime;

pub use error::{Error, Result};
