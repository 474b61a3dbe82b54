//! Minimal reverse-mode compute layer for Conv1D → max-pool → Bi-LSTM → dense
//! classifiers over inertial windows.
//!
//! Every layer caches what it needs during `forward` and consumes that cache in
//! `backward`, accumulating parameter gradients into [`Param::grad`]. The whole
//! stack is generic over [`Real`] so the same code trains in `f32` and is
//! gradient-checked in `f64`.

pub mod adam;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod linalg;
pub mod model;
pub mod ops;
pub mod param;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use error::{NnError, Result};
pub use linalg::Real;
pub use model::{Batch, Mode, Model, ModelSpec, Reduction, Variant};
pub use param::Param;
pub use tensor::Tensor;
