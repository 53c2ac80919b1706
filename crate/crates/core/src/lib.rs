//! Time-frequency analysis by IF equations: modified STFT with Gaussian
//! window derivatives, IF and group-delay estimators, synchrosqueezing,
//! extraction and iterative reassignment, plus scoring utilities.

pub mod bench;
pub mod config;
pub mod error;
pub mod estimators;
pub mod io;
pub mod methods;
pub mod metrics;
pub mod presets;
pub mod sharpen;
pub mod signal;
pub mod stft;

pub use error::{Error, Result};
