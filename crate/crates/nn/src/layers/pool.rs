use crate::error::{shape_err, NnError, Result};
use crate::linalg::Real;

struct PoolCache {
    in_len: usize,
    argmax: Vec<usize>,
}

/// Non-overlapping max pooling (stride = depth) along the last axis.
pub struct MaxPool1d {
    pub depth: usize,
    cache: Option<PoolCache>,
}

impl MaxPool1d {
    pub fn new(depth: usize) -> Self {
        Self { depth, cache: None }
    }

    pub fn out_len(&self, len: usize) -> Result<usize> {
        if self.depth == 0 || len < self.depth {
            return shape_err(format!("pooling depth {} exceeds length {len}", self.depth));
        }
        Ok(len / self.depth)
    }

    /// `x`: `[rows, L]` → `[rows, L/d]`.
    pub fn forward<T: Real>(&mut self, x: &[T], rows: usize, len: usize) -> Result<Vec<T>> {
        if x.len() != rows * len {
            return shape_err("pool input shape mismatch");
        }
        let p = self.out_len(len)?;
        let d = self.depth;
        let mut out = Vec::with_capacity(rows * p);
        let mut argmax = Vec::with_capacity(rows * p);
        for r in 0..rows {
            let row = &x[r * len..(r + 1) * len];
            for w in 0..p {
                let mut best = w * d;
                for i in w * d + 1..(w + 1) * d {
                    if row[i] > row[best] {
                        best = i;
                    }
                }
                out.push(row[best]);
                argmax.push(r * len + best);
            }
        }
        self.cache = Some(PoolCache { in_len: rows * len, argmax });
        Ok(out)
    }

    pub fn backward<T: Real>(&mut self, dy: &[T]) -> Result<Vec<T>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| NnError::Usage("pool backward called without a recorded forward".into()))?;
        if dy.len() != cache.argmax.len() {
            return shape_err("pool backward: upstream gradient shape mismatch");
        }
        let mut dx = vec![T::zero(); cache.in_len];
        for (&i, &g) in cache.argmax.iter().zip(dy) {
            dx[i] += g;
        }
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}
