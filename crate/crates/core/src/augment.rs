//! Training-set augmentation: rigid rotation by π/6 and additive Gaussian noise.

use std::f64::consts::FRAC_PI_6;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChannelStats, ImuSample, Window, CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationAxis {
    X,
    Y,
    Z,
    All,
}

/// 3×3 rotation applied identically to the accelerometer and gyroscope triads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[j][i];
            }
        }
        Self(t)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        Self(out)
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `|TᵀT - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.transpose().mul(self);
        let id = Self::identity();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((p.0[i][j] - id.0[i][j]).abs());
            }
        }
        worst
    }
}

/// The fixed π/6 rotation about a single axis.
pub fn rotation_matrix(axis: RotationAxis) -> Result<RotationMatrix> {
    let (c, s) = (FRAC_PI_6.cos(), FRAC_PI_6.sin());
    Ok(RotationMatrix(match axis {
        RotationAxis::X => [[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]],
        RotationAxis::Y => [[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]],
        RotationAxis::Z => [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]],
        RotationAxis::All => {
            return Err(Error::InvalidArgument(
                "ALL is not a single axis; expand it into X, Y and Z".into(),
            ))
        }
    }))
}

pub fn rotate_window(window: &Window, rot: &RotationMatrix) -> Window {
    window.map_samples(|s| ImuSample { f: rot.apply(s.f), w: rot.apply(s.w), t: s.t })
}

/// Originals followed by one rotated copy per axis (three copies for `All`).
/// Copies are always generated from the originals.
pub fn augment_rotation(train: &[Window], axis: RotationAxis) -> Result<Vec<Window>> {
    let axes: &[RotationAxis] = match axis {
        RotationAxis::All => &[RotationAxis::X, RotationAxis::Y, RotationAxis::Z],
        RotationAxis::X => &[RotationAxis::X],
        RotationAxis::Y => &[RotationAxis::Y],
        RotationAxis::Z => &[RotationAxis::Z],
    };
    let mut out = Vec::with_capacity(train.len() * (axes.len() + 1));
    out.extend_from_slice(train);
    for &a in axes {
        let rot = rotation_matrix(a)?;
        out.extend(train.iter().map(|w| rotate_window(w, &rot)));
    }
    Ok(out)
}

/// Additive-noise settings: per-channel σ is `fraction · std_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub fraction: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise fraction must be > 0, got {fraction}")));
        }
        Ok(Self { fraction, seed })
    }

    pub fn sigma(&self, stats: &ChannelStats) -> [f64; CHANNELS] {
        let mut s = [0.0; CHANNELS];
        for (c, v) in s.iter_mut().enumerate() {
            *v = self.fraction * stats.std[c];
        }
        s
    }
}

/// Noise stream for one window: a ChaCha stream keyed by the window index,
/// so results do not depend on processing order.
fn window_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Originals followed by one noisy copy of each.
pub fn augment_noise(train: &[Window], spec: &NoiseSpec, stats: &ChannelStats) -> Result<Vec<Window>> {
    stats.validate()?;
    let sigma = spec.sigma(stats);
    let dists: Vec<Normal<f64>> = sigma
        .iter()
        .map(|&s| Normal::new(0.0, s).map_err(|e| Error::InvalidArgument(e.to_string())))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(2 * train.len());
    out.extend_from_slice(train);
    for (i, w) in train.iter().enumerate() {
        let mut rng = window_rng(spec.seed, i);
        out.push(w.map_samples(|s| {
            let mut c = s.channels();
            for (v, d) in c.iter_mut().zip(&dists) {
                *v += d.sample(&mut rng);
            }
            ImuSample::from_channels(c, s.t)
        }));
    }
    Ok(out)
}
