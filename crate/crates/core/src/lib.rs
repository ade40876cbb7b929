pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod glm;
pub mod model;
pub mod os_linear;
pub mod plot;
pub mod transform;

pub use error::{Error, Result};
