use rand::Rng;

use crate::error::{shape_err, NnError, Result};
use crate::linalg::{gemm, Op, Real};
use crate::ops::{conv_out_len, im2col};
use crate::param::Param;

struct ConvCache<T> {
    batch: usize,
    out_len: usize,
    cols: Vec<T>,
    out: Vec<T>,
}

/// 1-D convolution with fused ReLU. Weight layout `[F, C, k]`.
pub struct Conv1d<T> {
    pub in_channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub weight: Param<T>,
    pub bias: Param<T>,
    cache: Option<ConvCache<T>>,
}

impl<T: Real> Conv1d<T> {
    pub fn new(
        prefix: &str,
        in_channels: usize,
        filters: usize,
        kernel: usize,
        stride: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let fan_in = in_channels * kernel;
        let bound = 1.0 / (fan_in as f64).sqrt();
        let w = super::uniform(rng, filters * fan_in, bound);
        Self {
            in_channels,
            filters,
            kernel,
            stride,
            weight: Param::new(format!("{prefix}.conv.weight"), &[filters, in_channels, kernel], w),
            bias: Param::zeros(format!("{prefix}.conv.bias"), &[filters]),
            cache: None,
        }
    }

    pub fn out_len(&self, len: usize) -> Result<usize> {
        conv_out_len(len, self.kernel, self.stride)
    }

    /// `x`: `[B, C, L]` → `[B, F, L']`.
    pub fn forward(&mut self, x: &[T], batch: usize, len: usize) -> Result<Vec<T>> {
        let c = self.in_channels;
        if x.len() != batch * c * len {
            return shape_err(format!("conv input has {} values, expected {batch}x{c}x{len}", x.len()));
        }
        let out_len = self.out_len(len)?;
        let ck = c * self.kernel;
        let f = self.filters;
        let mut cols = vec![T::zero(); batch * ck * out_len];
        let mut out = vec![T::zero(); batch * f * out_len];
        for b in 0..batch {
            let xb = &x[b * c * len..(b + 1) * c * len];
            let cb = &mut cols[b * ck * out_len..(b + 1) * ck * out_len];
            im2col(xb, c, len, self.kernel, self.stride, cb);
            let ob = &mut out[b * f * out_len..(b + 1) * f * out_len];
            gemm(Op::N, Op::N, f, out_len, ck, T::one(), &self.weight.value, cb, T::zero(), ob);
            for (fi, row) in ob.chunks_mut(out_len).enumerate() {
                let bias = self.bias.value[fi];
                for v in row {
                    let z = *v + bias;
                    *v = if z > T::zero() { z } else { T::zero() };
                }
            }
        }
        let result = out.clone();
        self.cache = Some(ConvCache { batch, out_len, cols, out });
        Ok(result)
    }

    /// Accumulates weight/bias gradients. The conv stage sits directly on the
    /// data, so no input gradient is produced.
    pub fn backward(&mut self, dy: &[T]) -> Result<()> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| NnError::Usage("conv backward called without a recorded forward".into()))?;
        let f = self.filters;
        let ck = self.in_channels * self.kernel;
        let l = cache.out_len;
        if dy.len() != cache.batch * f * l {
            return shape_err("conv backward: upstream gradient shape mismatch");
        }
        let mut dz = vec![T::zero(); f * l];
        for b in 0..cache.batch {
            let ob = &cache.out[b * f * l..(b + 1) * f * l];
            let gb = &dy[b * f * l..(b + 1) * f * l];
            for ((d, &o), &g) in dz.iter_mut().zip(ob).zip(gb) {
                *d = if o > T::zero() { g } else { T::zero() };
            }
            for (fi, row) in dz.chunks(l).enumerate() {
                self.bias.grad[fi] += row.iter().copied().sum::<T>();
            }
            let cb = &cache.cols[b * ck * l..(b + 1) * ck * l];
            gemm(Op::N, Op::T, f, ck, l, T::one(), &dz, cb, T::one(), &mut self.weight.grad);
        }
        Ok(())
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}
