//! Inertial activity-classification benchmark.
//!
//! Loads four public IMU datasets, applies augmentation and denoising
//! techniques, trains the convolutional/recurrent classifier from
//! [`imubench_nn`] and reports per-technique accuracy changes against a
//! baseline.

pub mod augment;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod preprocess;
pub mod signal;
pub mod training;

pub use error::{Error, Result};
