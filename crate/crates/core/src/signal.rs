//! Inertial samples, labelled windows and per-channel normalisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of inertial channels: specific force (3) then angular rate (3).
pub const CHANNELS: usize = 6;

/// One 6-axis reading: specific force `f` (m/s²), angular rate `w` (rad/s)
/// and the sample index `t` within its recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub f: [f64; 3],
    pub w: [f64; 3],
    pub t: u64,
}

impl ImuSample {
    pub fn new(f: [f64; 3], w: [f64; 3], t: u64) -> Result<Self> {
        let s = Self { f, w, t };
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("sample {t}: f={f:?} w={w:?}")));
        }
        Ok(s)
    }

    pub fn from_channels(c: [f64; CHANNELS], t: u64) -> Self {
        Self { f: [c[0], c[1], c[2]], w: [c[3], c[4], c[5]], t }
    }

    pub fn channels(&self) -> [f64; CHANNELS] {
        [self.f[0], self.f[1], self.f[2], self.w[0], self.w[1], self.w[2]]
    }

    pub fn is_finite(&self) -> bool {
        self.f.iter().chain(&self.w).all(|v| v.is_finite())
    }
}

/// Contiguous recording with one class label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub subject: u32,
    pub samples: Vec<ImuSample>,
    pub labels: Vec<usize>,
}

impl LabeledStream {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Fixed-length, single-label slice of a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub samples: Vec<ImuSample>,
    pub label: usize,
    pub subject: u32,
    pub rate_hz: u32,
}

impl Window {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn map_samples(&self, mut f: impl FnMut(&ImuSample) -> ImuSample) -> Window {
        Window {
            samples: self.samples.iter().map(&mut f).collect(),
            label: self.label,
            subject: self.subject,
            rate_hz: self.rate_hz,
        }
    }
}

/// Cuts `stream` into windows starting at `0, stride, 2·stride, …`. Windows
/// that straddle a label change are dropped; a trailing partial window is
/// never emitted.
pub fn segment_stream(
    stream: &LabeledStream,
    rate_hz: u32,
    win_len: usize,
    stride: usize,
) -> Result<Vec<Window>> {
    if win_len == 0 || stride == 0 {
        return Err(Error::InvalidArgument(format!(
            "window length ({win_len}) and stride ({stride}) must be positive"
        )));
    }
    if stream.labels.len() != stream.samples.len() {
        return Err(Error::InvalidArgument("stream has mismatched label count".into()));
    }
    let n = stream.len();
    let mut out = Vec::new();
    let mut start = 0;
    while start + win_len <= n {
        let labels = &stream.labels[start..start + win_len];
        if labels.iter().all(|&l| l == labels[0]) {
            out.push(Window {
                samples: stream.samples[start..start + win_len].to_vec(),
                label: labels[0],
                subject: stream.subject,
                rate_hz,
            });
        }
        start += stride;
    }
    Ok(out)
}

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: [f64; CHANNELS],
    pub std: [f64; CHANNELS],
}

impl ChannelStats {
    pub fn validate(&self) -> Result<()> {
        for c in 0..CHANNELS {
            if !self.mean[c].is_finite() || !self.std[c].is_finite() {
                return Err(Error::NonFinite(format!("channel {c} statistics")));
            }
            if self.std[c] <= 0.0 {
                return Err(Error::DegenerateChannel { channel: c });
            }
        }
        Ok(())
    }
}

/// Fits per-channel statistics over every sample of every window.
pub fn fit_stats(windows: &[Window]) -> Result<ChannelStats> {
    let count: usize = windows.iter().map(Window::len).sum();
    if count == 0 {
        return Err(Error::Empty("no samples to fit channel statistics".into()));
    }
    let n = count as f64;
    let mut mean = [0.0; CHANNELS];
    for s in windows.iter().flat_map(|w| &w.samples) {
        for (m, v) in mean.iter_mut().zip(s.channels()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    // second pass keeps the variance accurate for large offsets
    let mut var = [0.0; CHANNELS];
    for s in windows.iter().flat_map(|w| &w.samples) {
        for ((acc, v), m) in var.iter_mut().zip(s.channels()).zip(mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let mut std = [0.0; CHANNELS];
    for c in 0..CHANNELS {
        std[c] = (var[c] / n).sqrt();
        let scale = mean[c].abs().max(1.0);
        if std[c] <= 1e-12 * scale {
            return Err(Error::DegenerateChannel { channel: c });
        }
    }
    Ok(ChannelStats { mean, std })
}

/// z-scores every channel: `(x - mean_c) / std_c`.
pub fn normalize(window: &Window, stats: &ChannelStats) -> Window {
    window.map_samples(|s| {
        let mut c = s.channels();
        for (i, v) in c.iter_mut().enumerate() {
            *v = (*v - stats.mean[i]) / stats.std[i];
        }
        ImuSample::from_channels(c, s.t)
    })
}

/// Inverse of [`normalize`].
pub fn denormalize(window: &Window, stats: &ChannelStats) -> Window {
    window.map_samples(|s| {
        let mut c = s.channels();
        for (i, v) in c.iter_mut().enumerate() {
            *v = *v * stats.std[i] + stats.mean[i];
        }
        ImuSample::from_channels(c, s.t)
    })
}
