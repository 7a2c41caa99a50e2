pub mod classifiers;
pub mod data;
pub mod detection;
pub mod error;
pub mod evaluation;
pub mod noise;
pub mod runner;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
