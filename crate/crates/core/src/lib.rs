//! Channel sounding with multiplicative antenna arrays.

pub mod beamform;
pub mod channel;
pub mod cli;
pub mod compare;
pub mod csvfmt;
pub mod error;
pub mod io;
pub mod model;
pub mod pattern;
pub mod scenario;
pub mod sic;
pub mod transform;
pub mod ura_estimate;

pub use error::{Error, Result};
