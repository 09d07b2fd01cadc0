//! Velocity estimation from irregular slot-pattern reference signals.
//!
//! The pipeline reuses the symbols of a per-slot reference-signal pattern as
//! non-uniform Doppler samples, concatenates them, and takes a plain
//! periodogram of the result. The resulting velocity profile carries one
//! peak train per target, spaced `n_slot` bins apart. Detection works on
//! the train structure, and ambiguity is resolved by pairing trains
//! observed on two carriers.
//!
//! Modules follow the processing chain:
//!
//! * [`patterns`]: slot patterns, comb patterns and sample-to-symbol maps
//! * [`waveform`]: normalized echo synthesis and the channel model
//! * [`spectrum`]: DFT, periodograms and the two-factor decomposition
//! * [`detect`]: CA-CFAR and periodic peak-train validation
//! * [`disambiguate`]: two-carrier alias resolution
//! * [`evaluate`]: Monte Carlo comparison against the comb-3 baseline
//! * [`scenario`], [`export`], [`cli`]: configuration files, CSV output
//!   and the command-line front end

pub mod cli;
pub mod detect;
pub mod disambiguate;
mod error;
pub mod evaluate;
pub mod export;
pub mod patterns;
pub mod scenario;
pub mod spectrum;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
