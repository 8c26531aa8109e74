pub mod clearance;
pub mod cnn;
pub mod error;
pub mod pipeline;
pub mod platform;
pub mod proposal;
pub mod raster;
pub mod structure;
pub mod synth;
pub mod thermal;

pub use error::{Error, Result};
