//! Direction-of-arrival estimation for compact microphone arrays with an
//! auxiliary microphone.
//!
//! The crate covers the full experimental chain:
//!
//! - [`geometry`]: array geometry, TDOAs, free-field transfer, DOA errors.
//! - [`spectral`]: STFT, recursively averaged cross-power spectra, PHAT.
//! - [`srp`]: conventional and auxiliary-microphone SRP spectra, the SRP
//!   functional over an azimuth grid, and the argmax DOA estimate.
//! - [`model`]: the analytic distortion comparison predicting where an
//!   auxiliary microphone helps, under a spherically isotropic field.
//! - [`sim`]: image-source room impulse responses, calibrated
//!   reverberation and noise levels, isotropic noise synthesis, and
//!   speech-like sources.
//! - [`harness`]: experiment orchestration (model sweeps, simulation
//!   campaigns, single-file localization) with CSV and WAV emission.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod rng;
pub mod sim;
pub mod spectral;
pub mod srp;
pub mod wav;

pub use error::{Error, Result};
