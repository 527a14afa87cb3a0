//! Location forensics from electrical network frequency (ENF) signatures.
//!
//! Power grids wander slightly around their nominal 50 or 60 Hz, and that
//! wander leaks into recordings made near the grid — directly in mains
//! captures, as faint hum in microphone recordings. Because the wander
//! pattern is characteristic of a grid, a recording can be attributed to
//! the grid it was made on. This crate implements the full pipeline:
//!
//! 1. [`spectral`] — decide whether a recording is a mains capture or a
//!    microphone recording from the SNR around the dominant mains
//!    component.
//! 2. [`filters`] + [`enf`] — band-pass the signal and estimate a
//!    per-frame frequency sequence with root-MUSIC.
//! 3. [`features`] — reduce each sequence to a small per-category feature
//!    vector.
//! 4. [`classifier`] — attribute feature vectors to grids with one-vs-one
//!    RBF SVMs, with a posterior threshold that rejects recordings from
//!    none of the trained grids.
//!
//! [`synth`] generates seeded recordings with known ground truth for
//! testing and calibration, and [`datastore`] handles ingestion and the
//! flat-file artifact formats shared across pipeline stages.

pub mod classifier;
pub mod datastore;
pub mod enf;
pub mod error;
pub mod features;
pub mod filters;
mod poly;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
