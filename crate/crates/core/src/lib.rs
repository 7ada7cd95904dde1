//! Spectral roll-off points (SROPs) of signals, images and CNN feature maps.

pub mod error;
pub mod io;
pub mod randnet;
pub mod spectral;
pub mod stats;
pub mod synth;
pub mod tensor;

pub use error::{Error, FormatError, Result};
