pub mod analysis;
pub mod biot_savart;
pub mod curve;
pub mod error;
pub mod meshref;
pub mod nufft;
pub mod problems;
pub mod reparam;
pub mod run;
pub mod spectral;
pub mod timestep;

pub use error::{Error, Result};
