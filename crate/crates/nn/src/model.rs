//! Baseline / Head2 / Head3 classifier assembly.
//!
//! Each head runs conv1d+ReLU → max-pool → Bi-LSTM → temporal reduction →
//! dropout over its own channel subset. Head features are concatenated and
//! fed through a dense layer of `fc_width` units and a dense output layer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{shape_err, NnError, Result};
use crate::layers::{BiLstm, Conv1d, Dense, MaxPool1d};
use crate::linalg::Real;
use crate::ops::{check_rate, dropout_mask, softmax_xent, softmax_xent_grad};
use crate::param::Param;
use crate::tensor::Tensor;

/// Input channels per sample: `fx, fy, fz, wx, wy, wz`.
pub const CHANNELS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Baseline,
    Head2,
    Head3,
}

impl Variant {
    pub fn default_heads(self) -> Vec<Vec<usize>> {
        match self {
            Variant::Baseline => vec![vec![0, 1, 2, 3, 4, 5]],
            Variant::Head2 => vec![vec![0, 1, 2], vec![3, 4, 5]],
            Variant::Head3 => vec![vec![0, 3], vec![1, 4], vec![2, 5]],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Head2 => "head2",
            Variant::Head3 => "head3",
        }
    }
}

/// How the Bi-LSTM sequence is collapsed before the dense layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// `[h_fwd(T-1) ; h_bwd(0)]`
    LastStep,
    /// Time average of `[h_fwd(t) ; h_bwd(t)]`.
    MeanPool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub variant: Variant,
    pub heads: Vec<Vec<usize>>,
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pool: usize,
    pub hidden: usize,
    pub fc_width: usize,
    pub classes: usize,
    pub dropout: f64,
    pub reduction: Reduction,
}

impl ModelSpec {
    pub fn new(variant: Variant, classes: usize) -> Self {
        Self {
            variant,
            heads: variant.default_heads(),
            filters: 64,
            kernel: 5,
            stride: 1,
            pool: 3,
            hidden: 128,
            fc_width: 256,
            classes,
            dropout: 0.25,
            reduction: Reduction::LastStep,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let spec_err = |m: String| Err(NnError::Spec(m));
        if self.heads.is_empty() {
            return spec_err("no heads".into());
        }
        let mut seen = [false; CHANNELS];
        for head in &self.heads {
            if head.is_empty() {
                return spec_err("empty head".into());
            }
            for &c in head {
                if c >= CHANNELS {
                    return spec_err(format!("channel {c} out of range"));
                }
                if seen[c] {
                    return spec_err(format!("channel {c} assigned to more than one head"));
                }
                seen[c] = true;
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return spec_err(format!("channel {c} not assigned to any head"));
        }
        if self.filters == 0 || self.kernel == 0 || self.stride == 0 || self.pool == 0 {
            return spec_err("filters, kernel, stride and pool must be positive".into());
        }
        if self.hidden == 0 || self.fc_width == 0 {
            return spec_err("hidden size and fc width must be positive".into());
        }
        if self.classes < 2 {
            return spec_err(format!("need at least 2 classes, got {}", self.classes));
        }
        check_rate(self.dropout).map_err(|e| NnError::Spec(e.to_string()))
    }

    /// Shortest window the conv + pool stack accepts.
    pub fn min_window_len(&self) -> usize {
        self.kernel + (self.pool - 1) * self.stride
    }

    pub fn canonical(&self) -> String {
        format!(
            "v1;variant={};heads={:?};F={};k={};s={};d={};H={};fc={};K={};p={};reduce={:?}",
            self.variant.name(),
            self.heads,
            self.filters,
            self.kernel,
            self.stride,
            self.pool,
            self.hidden,
            self.fc_width,
            self.classes,
            self.dropout,
            self.reduction
        )
    }

    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.canonical().as_bytes()).into()
    }
}

/// Mini-batch of windows laid out `[B, 6, L]`.
#[derive(Debug, Clone)]
pub struct Batch<T> {
    pub data: Vec<T>,
    pub batch: usize,
    pub len: usize,
}

impl<T: Real> Batch<T> {
    pub fn new(data: Vec<T>, batch: usize, len: usize) -> Result<Self> {
        if data.len() != batch * CHANNELS * len {
            return shape_err(format!(
                "batch buffer has {} values, expected {batch}x{CHANNELS}x{len}",
                data.len()
            ));
        }
        Ok(Self { data, batch, len })
    }

    fn gather(&self, channels: &[usize]) -> Vec<T> {
        let l = self.len;
        let mut out = Vec::with_capacity(self.batch * channels.len() * l);
        for b in 0..self.batch {
            for &c in channels {
                let off = (b * CHANNELS + c) * l;
                out.extend_from_slice(&self.data[off..off + l]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active; the mask stream is seeded so forward passes repeat.
    Train { seed: u64 },
    Eval,
}

struct HeadCache<T> {
    batch: usize,
    steps: usize,
    pooled_len: usize,
    mask: Option<Vec<T>>,
}

struct Head<T> {
    channels: Vec<usize>,
    conv: Conv1d<T>,
    pool: MaxPool1d,
    lstm: BiLstm<T>,
    cache: Option<HeadCache<T>>,
}

impl<T: Real> Head<T> {
    /// Conv + pool, returning `[B, F, P]`.
    fn features(&mut self, batch: &Batch<T>) -> Result<(Vec<T>, usize)> {
        let x = batch.gather(&self.channels);
        let y = self.conv.forward(&x, batch.batch, batch.len)?;
        let conv_len = self.conv.out_len(batch.len)?;
        let rows = batch.batch * self.conv.filters;
        let p = self.pool.out_len(conv_len)?;
        let pooled = self.pool.forward(&y, rows, conv_len)?;
        Ok((pooled, p))
    }

    fn forward(
        &mut self,
        batch: &Batch<T>,
        reduction: Reduction,
        dropout: Option<(f64, &mut ChaCha8Rng)>,
    ) -> Result<Vec<T>> {
        let (pooled, steps) = self.features(batch)?;
        let (b, f) = (batch.batch, self.conv.filters);
        // [B, F, P] -> [P, B, F]
        let mut seq = vec![T::zero(); steps * b * f];
        for bi in 0..b {
            for fi in 0..f {
                for t in 0..steps {
                    seq[(t * b + bi) * f + fi] = pooled[(bi * f + fi) * steps + t];
                }
            }
        }
        let h = self.lstm.hidden();
        let out = self.lstm.run(&seq, steps, b)?;
        let w = 2 * h;
        let mut feat = vec![T::zero(); b * w];
        match reduction {
            Reduction::LastStep => {
                for bi in 0..b {
                    let last = &out[((steps - 1) * b + bi) * w..((steps - 1) * b + bi) * w + h];
                    let first = &out[bi * w + h..bi * w + w];
                    feat[bi * w..bi * w + h].copy_from_slice(last);
                    feat[bi * w + h..(bi + 1) * w].copy_from_slice(first);
                }
            }
            Reduction::MeanPool => {
                let scale = T::one() / T::from_f64(steps as f64);
                for t in 0..steps {
                    for bi in 0..b {
                        let row = &out[(t * b + bi) * w..(t * b + bi + 1) * w];
                        for (acc, &v) in feat[bi * w..(bi + 1) * w].iter_mut().zip(row) {
                            *acc += v * scale;
                        }
                    }
                }
            }
        }
        let mask = match dropout {
            Some((p, rng)) if p > 0.0 => {
                let m: Vec<T> = dropout_mask(feat.len(), p, rng);
                for (v, &k) in feat.iter_mut().zip(&m) {
                    *v *= k;
                }
                Some(m)
            }
            _ => None,
        };
        self.cache = Some(HeadCache { batch: b, steps, pooled_len: steps, mask });
        Ok(feat)
    }

    fn backward(&mut self, dfeat: &[T], reduction: Reduction) -> Result<()> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| NnError::Usage("head backward called without a recorded forward".into()))?;
        let (b, steps) = (cache.batch, cache.steps);
        let h = self.lstm.hidden();
        let w = 2 * h;
        let mut dfeat = dfeat.to_vec();
        if let Some(mask) = &cache.mask {
            for (d, &m) in dfeat.iter_mut().zip(mask) {
                *d *= m;
            }
        }
        let mut dout = vec![T::zero(); steps * b * w];
        match reduction {
            Reduction::LastStep => {
                for bi in 0..b {
                    let last = ((steps - 1) * b + bi) * w;
                    dout[last..last + h].copy_from_slice(&dfeat[bi * w..bi * w + h]);
                    dout[bi * w + h..bi * w + w].copy_from_slice(&dfeat[bi * w + h..(bi + 1) * w]);
                }
            }
            Reduction::MeanPool => {
                let scale = T::one() / T::from_f64(steps as f64);
                for t in 0..steps {
                    for bi in 0..b {
                        let dst = &mut dout[(t * b + bi) * w..(t * b + bi + 1) * w];
                        for (d, &g) in dst.iter_mut().zip(&dfeat[bi * w..(bi + 1) * w]) {
                            *d = g * scale;
                        }
                    }
                }
            }
        }
        let dseq = self.lstm.run_backward(&dout)?;
        let f = self.conv.filters;
        let p = cache.pooled_len;
        let mut dpooled = vec![T::zero(); b * f * p];
        for bi in 0..b {
            for fi in 0..f {
                for t in 0..p {
                    dpooled[(bi * f + fi) * p + t] = dseq[(t * b + bi) * f + fi];
                }
            }
        }
        let dconv = self.pool.backward(&dpooled)?;
        self.conv.backward(&dconv)
    }

    fn clear(&mut self) {
        self.cache = None;
        self.conv.clear_cache();
        self.pool.clear_cache();
        self.lstm.clear_cache();
    }
}

struct ModelCache {
    batch: usize,
}

pub struct Model<T> {
    spec: ModelSpec,
    heads: Vec<Head<T>>,
    fc: Dense<T>,
    out: Dense<T>,
    cache: Option<ModelCache>,
}

impl<T: Real> Model<T> {
    /// Builds a model with deterministic scaled-uniform initialisation.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut heads = Vec::with_capacity(spec.heads.len());
        for (i, channels) in spec.heads.iter().enumerate() {
            let prefix = format!("head{i}");
            heads.push(Head {
                channels: channels.clone(),
                conv: Conv1d::new(&prefix, channels.len(), spec.filters, spec.kernel, spec.stride, &mut rng),
                pool: MaxPool1d::new(spec.pool),
                lstm: BiLstm::new(&prefix, spec.filters, spec.hidden, &mut rng),
                cache: None,
            });
        }
        let fused = 2 * spec.hidden * heads.len();
        let fc = Dense::new("fc", fused, spec.fc_width, &mut rng);
        let out = Dense::new("out", spec.fc_width, spec.classes, &mut rng);
        Ok(Self { spec, heads, fc, out, cache: None })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        let mut v = Vec::new();
        for h in &self.heads {
            v.push(&h.conv.weight);
            v.push(&h.conv.bias);
            for l in [&h.lstm.forward, &h.lstm.backward] {
                v.extend([&l.wx, &l.wh, &l.bias]);
            }
        }
        v.extend([&self.fc.weight, &self.fc.bias, &self.out.weight, &self.out.bias]);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = Vec::new();
        for h in &mut self.heads {
            v.push(&mut h.conv.weight);
            v.push(&mut h.conv.bias);
            v.extend(h.lstm.forward.params_mut());
            v.extend(h.lstm.backward.params_mut());
        }
        v.extend([&mut self.fc.weight, &mut self.fc.bias, &mut self.out.weight, &mut self.out.bias]);
        v
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn clear(&mut self) {
        self.cache = None;
        for h in &mut self.heads {
            h.clear();
        }
        self.fc.clear_cache();
        self.out.clear_cache();
    }

    /// Forward pass recording activations; returns logits `[B, K]`.
    pub fn forward(&mut self, batch: &Batch<T>, mode: Mode) -> Result<Tensor<T>> {
        self.clear();
        if batch.batch == 0 {
            return shape_err("empty batch");
        }
        if batch.len < self.spec.min_window_len() {
            return shape_err(format!(
                "window length {} shorter than the minimum {}",
                batch.len,
                self.spec.min_window_len()
            ));
        }
        let b = batch.batch;
        let mut rng = match mode {
            Mode::Train { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            Mode::Eval => None,
        };
        let reduction = self.spec.reduction;
        let p = self.spec.dropout;
        let w = 2 * self.spec.hidden;
        let nh = self.heads.len();
        let mut fused = vec![T::zero(); b * w * nh];
        for (i, head) in self.heads.iter_mut().enumerate() {
            let feat = head.forward(batch, reduction, rng.as_mut().map(|r| (p, r)))?;
            for bi in 0..b {
                fused[(bi * nh + i) * w..(bi * nh + i + 1) * w].copy_from_slice(&feat[bi * w..(bi + 1) * w]);
            }
        }
        let hidden = self.fc.forward(&fused, b)?;
        let logits = self.out.forward(&hidden, b)?;
        debug_assert!(logits.iter().all(|v| v.is_finite()), "non-finite logits");
        self.cache = Some(ModelCache { batch: b });
        Tensor::new(vec![b, self.spec.classes], logits)
    }

    /// Back-propagates `dlogits` (`[B, K]`), accumulating into every
    /// parameter's gradient. Consumes the recorded forward pass.
    pub fn backward(&mut self, dlogits: &[T]) -> Result<()> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| NnError::Usage("backward called without a recorded forward pass".into()))?;
        let b = cache.batch;
        if dlogits.len() != b * self.spec.classes {
            return shape_err("backward: logit gradient shape mismatch");
        }
        let dhidden = self.out.backward(dlogits)?;
        let dfused = self.fc.backward(&dhidden)?;
        let w = 2 * self.spec.hidden;
        let nh = self.heads.len();
        let reduction = self.spec.reduction;
        for (i, head) in self.heads.iter_mut().enumerate() {
            let mut dfeat = Vec::with_capacity(b * w);
            for bi in 0..b {
                dfeat.extend_from_slice(&dfused[(bi * nh + i) * w..(bi * nh + i + 1) * w]);
            }
            head.backward(&dfeat, reduction)?;
        }
        debug_assert!(
            self.params().iter().all(|p| p.grad.iter().all(|g| g.is_finite())),
            "non-finite gradient"
        );
        Ok(())
    }

    /// Mean cross-entropy over the batch; gradients are accumulated.
    pub fn loss_and_grad(&mut self, batch: &Batch<T>, labels: &[usize], mode: Mode) -> Result<T> {
        if labels.len() != batch.batch {
            return shape_err(format!("{} labels for a batch of {}", labels.len(), batch.batch));
        }
        let logits = self.forward(batch, mode)?;
        let k = self.spec.classes;
        let scale = T::one() / T::from_f64(batch.batch as f64);
        let mut total = T::zero();
        let mut dlogits = Vec::with_capacity(batch.batch * k);
        for (row, &y) in logits.data().chunks(k).zip(labels) {
            let (loss, probs) = softmax_xent(row, y)?;
            total += loss;
            dlogits.extend(softmax_xent_grad(&probs, y).into_iter().map(|g| g * scale));
        }
        self.backward(&dlogits)?;
        Ok(total * scale)
    }

    /// Mean cross-entropy without recording gradients.
    pub fn loss(&mut self, batch: &Batch<T>, labels: &[usize], mode: Mode) -> Result<T> {
        let logits = self.forward(batch, mode)?;
        self.clear();
        let k = self.spec.classes;
        let mut total = T::zero();
        for (row, &y) in logits.data().chunks(k).zip(labels) {
            total += softmax_xent(row, y)?.0;
        }
        Ok(total / T::from_f64(batch.batch as f64))
    }

    /// Arg-max class per window, dropout disabled.
    pub fn predict(&mut self, batch: &Batch<T>) -> Result<Vec<usize>> {
        let logits = self.forward(batch, Mode::Eval)?;
        self.clear();
        Ok(logits
            .data()
            .chunks(self.spec.classes)
            .map(|row| {
                let mut best = 0;
                for (j, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect())
    }

    /// Conv + pool output of each head, `[B, F, P]`.
    pub fn head_features(&mut self, batch: &Batch<T>) -> Result<Vec<Tensor<T>>> {
        let f = self.spec.filters;
        let mut out = Vec::new();
        for head in &mut self.heads {
            let (pooled, p) = head.features(batch)?;
            head.clear();
            out.push(Tensor::new(vec![batch.batch, f, p], pooled)?);
        }
        Ok(out)
    }
}
