pub mod analysis;
pub mod design;
pub mod error;
pub mod mc;
pub mod mvn;
pub mod quad;
pub mod rng;
pub mod root;
pub mod service;
pub mod thresholds;

pub use error::{Error, Result};
