//! Batched layers with cached activations for reverse-mode gradients.
//!
//! Layout conventions: conv/pool tensors are `[B, C, L]`, recurrent tensors
//! are time-major `[T, B, C]`, dense tensors are `[B, N]`.

mod conv;
mod dense;
mod lstm;
mod pool;

pub use conv::Conv1d;
pub use dense::Dense;
pub use lstm::{BiLstm, Lstm};
pub use pool::MaxPool1d;

use rand::Rng;

use crate::linalg::Real;

/// Scaled-uniform initialiser `U(-bound, bound)`.
pub(crate) fn uniform<T: Real>(rng: &mut impl Rng, n: usize, bound: f64) -> Vec<T> {
    (0..n).map(|_| T::from_f64(rng.gen_range(-bound..=bound))).collect()
}
