use rand::Rng;

use crate::error::{shape_err, NnError, Result};
use crate::linalg::{gemm, Op, Real};
use crate::param::Param;

/// Affine layer `y = x·W + b` with `W` stored `[N, M]`.
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Param<T>,
    pub bias: Param<T>,
    cache: Option<(usize, Vec<T>)>,
}

impl<T: Real> Dense<T> {
    pub fn new(name: &str, inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let w = super::uniform(rng, inputs * outputs, bound);
        Self {
            inputs,
            outputs,
            weight: Param::new(format!("{name}.weight"), &[inputs, outputs], w),
            bias: Param::zeros(format!("{name}.bias"), &[outputs]),
            cache: None,
        }
    }

    pub fn forward(&mut self, x: &[T], batch: usize) -> Result<Vec<T>> {
        if x.len() != batch * self.inputs {
            return shape_err(format!(
                "dense input has {} values, expected {batch}x{}",
                x.len(),
                self.inputs
            ));
        }
        let m = self.outputs;
        let mut y = Vec::with_capacity(batch * m);
        for _ in 0..batch {
            y.extend_from_slice(&self.bias.value);
        }
        gemm(Op::N, Op::N, batch, m, self.inputs, T::one(), x, &self.weight.value, T::one(), &mut y);
        self.cache = Some((batch, x.to_vec()));
        Ok(y)
    }

    pub fn backward(&mut self, dy: &[T]) -> Result<Vec<T>> {
        let (batch, x) = self
            .cache
            .take()
            .ok_or_else(|| NnError::Usage("dense backward called without a recorded forward".into()))?;
        let (n, m) = (self.inputs, self.outputs);
        if dy.len() != batch * m {
            return shape_err("dense backward: upstream gradient shape mismatch");
        }
        gemm(Op::T, Op::N, n, m, batch, T::one(), &x, dy, T::one(), &mut self.weight.grad);
        for row in dy.chunks(m) {
            for (g, &d) in self.bias.grad.iter_mut().zip(row) {
                *g += d;
            }
        }
        let mut dx = vec![T::zero(); batch * n];
        gemm(Op::N, Op::T, batch, n, m, T::one(), dy, &self.weight.value, T::zero(), &mut dx);
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}
