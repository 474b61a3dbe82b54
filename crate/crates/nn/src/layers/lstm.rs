use rand::Rng;

use crate::error::{shape_err, NnError, Result};
use crate::linalg::{gemm, sigmoid, Op, Real};
use crate::param::Param;

struct LstmCache<T> {
    steps: usize,
    batch: usize,
    x: Vec<T>,
    /// Post-activation gates `[T, B, 4H]` in i, f, g, o order.
    gates: Vec<T>,
    cell: Vec<T>,
    hidden: Vec<T>,
}

/// Single-direction LSTM. `W_x` is `[4H, C]`, `W_h` is `[4H, H]`, gate order
/// is input, forget, candidate, output.
pub struct Lstm<T> {
    pub input: usize,
    pub hidden: usize,
    pub reverse: bool,
    pub wx: Param<T>,
    pub wh: Param<T>,
    pub bias: Param<T>,
    cache: Option<LstmCache<T>>,
}

impl<T: Real> Lstm<T> {
    pub fn new(prefix: &str, input: usize, hidden: usize, reverse: bool, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let g = 4 * hidden;
        let mut bias = vec![T::zero(); g];
        // forget gate starts open
        for b in &mut bias[hidden..2 * hidden] {
            *b = T::one();
        }
        Self {
            input,
            hidden,
            reverse,
            wx: Param::new(format!("{prefix}.wx"), &[g, input], super::uniform(rng, g * input, bound)),
            wh: Param::new(format!("{prefix}.wh"), &[g, hidden], super::uniform(rng, g * hidden, bound)),
            bias: Param::new(format!("{prefix}.bias"), &[g], bias),
            cache: None,
        }
    }

    fn order(&self, steps: usize) -> Box<dyn Iterator<Item = usize>> {
        if self.reverse {
            Box::new((0..steps).rev())
        } else {
            Box::new(0..steps)
        }
    }

    fn prev(&self, t: usize, steps: usize) -> Option<usize> {
        if self.reverse {
            (t + 1 < steps).then_some(t + 1)
        } else {
            t.checked_sub(1)
        }
    }

    /// `x`: `[T, B, C]` → hidden states `[T, B, H]`.
    pub fn forward(&mut self, x: &[T], steps: usize, batch: usize) -> Result<Vec<T>> {
        let (c, h) = (self.input, self.hidden);
        let g = 4 * h;
        if x.len() != steps * batch * c {
            return shape_err(format!("lstm input has {} values, expected {steps}x{batch}x{c}", x.len()));
        }
        let mut pre = Vec::with_capacity(steps * batch * g);
        for _ in 0..steps * batch {
            pre.extend_from_slice(&self.bias.value);
        }
        gemm(Op::N, Op::T, steps * batch, g, c, T::one(), x, &self.wx.value, T::one(), &mut pre);

        let mut cell = vec![T::zero(); steps * batch * h];
        let mut hidden = vec![T::zero(); steps * batch * h];
        let bh = batch * h;
        let bg = batch * g;
        for t in self.order(steps) {
            let gt = &mut pre[t * bg..(t + 1) * bg];
            let prev = self.prev(t, steps);
            if let Some(p) = prev {
                let hp = &hidden[p * bh..(p + 1) * bh];
                gemm(Op::N, Op::T, batch, g, h, T::one(), hp, &self.wh.value, T::one(), gt);
            }
            for b in 0..batch {
                let row = &mut gt[b * g..(b + 1) * g];
                for j in 0..h {
                    row[j] = sigmoid(row[j]);
                    row[h + j] = sigmoid(row[h + j]);
                    row[2 * h + j] = row[2 * h + j].tanh();
                    row[3 * h + j] = sigmoid(row[3 * h + j]);
                }
                for j in 0..h {
                    let c_prev = match prev {
                        Some(p) => cell[p * bh + b * h + j],
                        None => T::zero(),
                    };
                    let ct = row[h + j] * c_prev + row[j] * row[2 * h + j];
                    cell[t * bh + b * h + j] = ct;
                    hidden[t * bh + b * h + j] = row[3 * h + j] * ct.tanh();
                }
            }
        }
        let out = hidden.clone();
        self.cache = Some(LstmCache { steps, batch, x: x.to_vec(), gates: pre, cell, hidden });
        Ok(out)
    }

    /// Back-propagation through time. `dh`: gradient w.r.t. every hidden
    /// state `[T, B, H]`; returns the input gradient `[T, B, C]`.
    pub fn backward(&mut self, dh: &[T]) -> Result<Vec<T>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| NnError::Usage("lstm backward called without a recorded forward".into()))?;
        let (steps, batch) = (cache.steps, cache.batch);
        let (c, h) = (self.input, self.hidden);
        let g = 4 * h;
        let (bh, bg) = (batch * h, batch * g);
        if dh.len() != steps * bh {
            return shape_err("lstm backward: upstream gradient shape mismatch");
        }
        let mut dgates = vec![T::zero(); steps * bg];
        let mut dh_next = vec![T::zero(); bh];
        let mut dc_next = vec![T::zero(); bh];
        let one = T::one();
        let order: Vec<usize> = self.order(steps).collect();
        for &t in order.iter().rev() {
            let prev = self.prev(t, steps);
            let acts = &cache.gates[t * bg..(t + 1) * bg];
            let dgt = &mut dgates[t * bg..(t + 1) * bg];
            for b in 0..batch {
                let a = &acts[b * g..(b + 1) * g];
                let d = &mut dgt[b * g..(b + 1) * g];
                for j in 0..h {
                    let k = b * h + j;
                    let (i, f, gg, o) = (a[j], a[h + j], a[2 * h + j], a[3 * h + j]);
                    let ct = cache.cell[t * bh + k];
                    let c_prev = prev.map_or(T::zero(), |p| cache.cell[p * bh + k]);
                    let tc = ct.tanh();
                    let dht = dh[t * bh + k] + dh_next[k];
                    let d_o = dht * tc;
                    let dc = dc_next[k] + dht * o * (one - tc * tc);
                    let di = dc * gg;
                    let dg = dc * i;
                    let df = dc * c_prev;
                    dc_next[k] = dc * f;
                    d[j] = di * i * (one - i);
                    d[h + j] = df * f * (one - f);
                    d[2 * h + j] = dg * (one - gg * gg);
                    d[3 * h + j] = d_o * o * (one - o);
                }
            }
            match prev {
                Some(p) => {
                    let hp = &cache.hidden[p * bh..(p + 1) * bh];
                    gemm(Op::T, Op::N, g, h, batch, one, dgt, hp, one, &mut self.wh.grad);
                    gemm(Op::N, Op::N, batch, h, g, one, dgt, &self.wh.value, T::zero(), &mut dh_next);
                }
                None => dh_next.iter_mut().for_each(|v| *v = T::zero()),
            }
        }
        gemm(Op::T, Op::N, g, c, steps * batch, one, &dgates, &cache.x, one, &mut self.wx.grad);
        for row in dgates.chunks(g) {
            for (acc, &d) in self.bias.grad.iter_mut().zip(row) {
                *acc += d;
            }
        }
        let mut dx = vec![T::zero(); steps * batch * c];
        gemm(Op::N, Op::N, steps * batch, c, g, one, &dgates, &self.wx.value, T::zero(), &mut dx);
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    pub fn params_mut(&mut self) -> [&mut Param<T>; 3] {
        [&mut self.wx, &mut self.wh, &mut self.bias]
    }
}

/// Bidirectional LSTM producing `[h_fwd ; h_bwd]` per step.
pub struct BiLstm<T> {
    pub forward: Lstm<T>,
    pub backward: Lstm<T>,
}

impl<T: Real> BiLstm<T> {
    pub fn new(prefix: &str, input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        Self {
            forward: Lstm::new(&format!("{prefix}.lstm_fwd"), input, hidden, false, rng),
            backward: Lstm::new(&format!("{prefix}.lstm_bwd"), input, hidden, true, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden
    }

    /// `x`: `[T, B, C]` → `[T, B, 2H]`.
    pub fn run(&mut self, x: &[T], steps: usize, batch: usize) -> Result<Vec<T>> {
        let h = self.hidden();
        let hf = self.forward.forward(x, steps, batch)?;
        let hb = self.backward.forward(x, steps, batch)?;
        let mut out = Vec::with_capacity(steps * batch * 2 * h);
        for (f, b) in hf.chunks(h).zip(hb.chunks(h)) {
            out.extend_from_slice(f);
            out.extend_from_slice(b);
        }
        Ok(out)
    }

    /// `dy`: `[T, B, 2H]` → `dx`: `[T, B, C]`.
    pub fn run_backward(&mut self, dy: &[T]) -> Result<Vec<T>> {
        let h = self.hidden();
        let n = dy.len() / (2 * h);
        let mut df = Vec::with_capacity(n * h);
        let mut db = Vec::with_capacity(n * h);
        for row in dy.chunks(2 * h) {
            df.extend_from_slice(&row[..h]);
            db.extend_from_slice(&row[h..]);
        }
        let mut dx = self.forward.backward(&df)?;
        let dxb = self.backward.backward(&db)?;
        for (a, b) in dx.iter_mut().zip(dxb) {
            *a += b;
        }
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.forward.clear_cache();
        self.backward.clear_cache();
    }
}
