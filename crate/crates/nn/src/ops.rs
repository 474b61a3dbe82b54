//! Stand-alone operators on single (unbatched) tensors.
//!
//! The batched layers in [`crate::layers`] reuse the kernels here; these
//! entry points exist for inspection and for oracle tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, NnError, Result};
use crate::layers::BiLstm;
use crate::linalg::{gemm, Op, Real};
use crate::tensor::Tensor;

pub fn conv_out_len(len: usize, kernel: usize, stride: usize) -> Result<usize> {
    if kernel == 0 || stride == 0 {
        return shape_err("kernel and stride must be positive");
    }
    if len < kernel {
        return shape_err(format!("kernel {kernel} longer than input length {len}"));
    }
    Ok((len - kernel) / stride + 1)
}

/// Unfolds `x: [C, L]` into `cols: [C·k, L']` with `cols[(c,i), t] = x[c, t·s + i]`.
pub fn im2col<T: Real>(x: &[T], channels: usize, len: usize, kernel: usize, stride: usize, cols: &mut [T]) {
    let out_len = (len - kernel) / stride + 1;
    for c in 0..channels {
        let xc = &x[c * len..(c + 1) * len];
        for i in 0..kernel {
            let row = &mut cols[(c * kernel + i) * out_len..(c * kernel + i + 1) * out_len];
            for (t, v) in row.iter_mut().enumerate() {
                *v = xc[t * stride + i];
            }
        }
    }
}

/// `y_f(t) = ReLU(Σ_c Σ_i w[f,c,i]·x[c, t·s+i] + b_f)`.
///
/// `x`: `[C, L]`, `weight`: `[F, C, k]`, `bias`: `[F]` → `[F, L']`.
pub fn conv1d_forward<T: Real>(
    x: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
) -> Result<Tensor<T>> {
    x.expect_rank(2, "conv1d input")?;
    weight.expect_rank(3, "conv1d weight")?;
    let (c, l) = (x.shape()[0], x.shape()[1]);
    let (f, wc, k) = (weight.shape()[0], weight.shape()[1], weight.shape()[2]);
    if wc != c {
        return shape_err(format!("conv1d weight expects {wc} channels, input has {c}"));
    }
    if bias.shape() != [f] {
        return shape_err(format!("conv1d bias shape {:?}, expected [{f}]", bias.shape()));
    }
    let out_len = conv_out_len(l, k, stride)?;
    let mut cols = vec![T::zero(); c * k * out_len];
    im2col(x.data(), c, l, k, stride, &mut cols);
    let mut out = vec![T::zero(); f * out_len];
    gemm(Op::N, Op::N, f, out_len, c * k, T::one(), weight.data(), &cols, T::zero(), &mut out);
    for (fi, row) in out.chunks_mut(out_len).enumerate() {
        for v in row {
            *v = (*v + bias.data()[fi]).max(T::zero());
        }
    }
    Tensor::new(vec![f, out_len], out)
}

/// Non-overlapping max pooling over the last axis: `[F, L]` → `[F, L/d]`.
pub fn maxpool1d<T: Real>(y: &Tensor<T>, depth: usize) -> Result<Tensor<T>> {
    y.expect_rank(2, "maxpool input")?;
    let (f, l) = (y.shape()[0], y.shape()[1]);
    if depth == 0 || l < depth {
        return shape_err(format!("pooling depth {depth} exceeds length {l}"));
    }
    let p = l / depth;
    let mut out = Vec::with_capacity(f * p);
    for row in y.data().chunks(l) {
        for w in row[..p * depth].chunks(depth) {
            out.push(w.iter().copied().fold(T::neg_infinity(), T::max));
        }
    }
    Tensor::new(vec![f, p], out)
}

/// Runs a Bi-LSTM over one sequence `x: [L, C]` → `[L, 2H]`.
pub fn bilstm_forward<T: Real>(x: &Tensor<T>, lstm: &mut BiLstm<T>) -> Result<Tensor<T>> {
    x.expect_rank(2, "bilstm input")?;
    let (l, c) = (x.shape()[0], x.shape()[1]);
    if l == 0 {
        return shape_err("bilstm needs at least one step");
    }
    if c != lstm.forward.input {
        return shape_err(format!("bilstm expects {} features, got {c}", lstm.forward.input));
    }
    let out = lstm.run(x.data(), l, 1)?;
    lstm.clear_cache();
    Tensor::new(vec![l, 2 * lstm.hidden()], out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Eval,
}

pub(crate) fn check_rate(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(NnError::Usage(format!("dropout rate {p} outside [0, 1)")));
    }
    Ok(())
}

/// Inverted-dropout mask: each entry is `1/(1-p)` with probability `1-p`, else 0.
pub fn dropout_mask<T: Real>(n: usize, p: f64, rng: &mut impl Rng) -> Vec<T> {
    let keep = 1.0 - p;
    let scale = T::from_f64(1.0 / keep);
    (0..n)
        .map(|_| if rng.gen::<f64>() < keep { scale } else { T::zero() })
        .collect()
}

pub fn dropout<T: Real>(h: &Tensor<T>, p: f64, mode: DropoutMode, seed: u64) -> Result<Tensor<T>> {
    check_rate(p)?;
    if mode == DropoutMode::Eval || p == 0.0 {
        return Ok(h.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask: Vec<T> = dropout_mask(h.len(), p, &mut rng);
    let data = h.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Tensor::new(h.shape().to_vec(), data)
}

/// `y = h·W + b` with `h: [N]`, `W: [N, M]`, `b: [M]`.
pub fn dense<T: Real>(h: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    h.expect_rank(1, "dense input")?;
    w.expect_rank(2, "dense weight")?;
    let (n, m) = (w.shape()[0], w.shape()[1]);
    if h.len() != n || b.shape() != [m] {
        return shape_err(format!(
            "dense: input {:?}, weight {:?}, bias {:?}",
            h.shape(),
            w.shape(),
            b.shape()
        ));
    }
    let mut y = b.data().to_vec();
    gemm(Op::N, Op::N, 1, m, n, T::one(), h.data(), w.data(), T::one(), &mut y);
    Tensor::new(vec![m], y)
}

/// Max-shifted softmax and cross-entropy `-ln p[label]`.
pub fn softmax_xent<T: Real>(logits: &[T], label: usize) -> Result<(T, Vec<T>)> {
    if logits.len() < 2 {
        return shape_err("softmax needs at least two classes");
    }
    if label >= logits.len() {
        return shape_err(format!("label {label} out of range for {} classes", logits.len()));
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut probs: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = probs.iter().copied().sum();
    for p in &mut probs {
        *p = *p / sum;
    }
    let loss = -((logits[label] - max) - sum.ln());
    Ok((loss, probs))
}

/// Gradient of [`softmax_xent`] with respect to the logits: `p - onehot(label)`.
pub fn softmax_xent_grad<T: Real>(probs: &[T], label: usize) -> Vec<T> {
    let mut g = probs.to_vec();
    g[label] -= T::one();
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
        Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
    }

    fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>) -> Vec<f64> {
        let (c, l) = (x.shape()[0], x.shape()[1]);
        let (f, k) = (w.shape()[0], w.shape()[2]);
        let mut out = Vec::new();
        for fi in 0..f {
            for t in 0..=l - k {
                let mut s = b.data()[fi];
                for ci in 0..c {
                    for i in 0..k {
                        s += w.at(&[fi, ci, i]) * x.at(&[ci, t + i]);
                    }
                }
                out.push(s.max(0.0));
            }
        }
        out
    }

    #[test]
    fn conv_k1_passthrough_is_relu_of_channel() {
        let x = Tensor::new(vec![2, 4], vec![1.0, -2.0, 3.0, -4.0, 9.0, 9.0, 9.0, 9.0]).unwrap();
        let w = Tensor::new(vec![1, 2, 1], vec![1.0, 0.0]).unwrap();
        let b = Tensor::new(vec![1], vec![0.0]).unwrap();
        let y = conv1d_forward(&x, &w, &b, 1).unwrap();
        assert_eq!(y.shape(), &[1, 4]);
        assert_eq!(y.data(), &[1.0, 0.0, 3.0, 0.0]);
    }

    #[test]
    fn conv_all_negative_preactivation_is_zero() {
        let x = Tensor::from_fn(&[3, 10], |_| 1.0f64);
        let w = Tensor::from_fn(&[4, 3, 5], |_| -0.5);
        let b = Tensor::from_fn(&[4], |_| -1.0);
        let y = conv1d_forward(&x, &w, &b, 1).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = rand_tensor(&mut rng, &[6, 32]);
        let w = rand_tensor(&mut rng, &[5, 6, 5]);
        let b = rand_tensor(&mut rng, &[5]);
        let y = conv1d_forward(&x, &w, &b, 1).unwrap();
        assert_eq!(y.shape(), &[5, 28]);
        for (a, e) in y.data().iter().zip(naive_conv(&x, &w, &b)) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-5);
        }
    }

    #[test]
    fn conv_rejects_short_input() {
        let x = Tensor::<f32>::zeros(&[1, 3]);
        let w = Tensor::<f32>::zeros(&[1, 1, 5]);
        let b = Tensor::<f32>::zeros(&[1]);
        assert!(matches!(conv1d_forward(&x, &w, &b, 1), Err(NnError::Shape(_))));
    }

    #[test]
    fn maxpool_hand_case() {
        let y = Tensor::new(vec![1, 6], vec![1.0f32, 5.0, 2.0, 0.0, 0.0, 3.0]).unwrap();
        assert_eq!(maxpool1d(&y, 3).unwrap().data(), &[5.0, 3.0]);
    }

    #[test]
    fn maxpool_constant_and_short() {
        let y = Tensor::from_fn(&[2, 7], |_| 4.0f32);
        let p = maxpool1d(&y, 3).unwrap();
        assert_eq!(p.shape(), &[2, 2]);
        assert!(p.data().iter().all(|&v| v == 4.0));
        assert!(maxpool1d(&Tensor::<f32>::zeros(&[1, 2]), 3).is_err());
    }

    #[test]
    fn dropout_eval_and_zero_rate_are_identity() {
        let h = Tensor::from_fn(&[50], |i| i as f32 - 20.0);
        assert_eq!(dropout(&h, 0.25, DropoutMode::Eval, 1).unwrap(), h);
        assert_eq!(dropout(&h, 0.0, DropoutMode::Train, 1).unwrap(), h);
        assert!(dropout(&h, 1.0, DropoutMode::Train, 1).is_err());
    }

    #[test]
    fn dropout_survivors_scaled() {
        let h = Tensor::from_fn(&[1000], |_| 1.0f64);
        let y = dropout(&h, 0.25, DropoutMode::Train, 3).unwrap();
        for &v in y.data() {
            assert!(v == 0.0 || (v - 1.0 / 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_identity_bias_and_oracle() {
        let h = Tensor::new(vec![3], vec![1.0f64, 2.0, 3.0]).unwrap();
        let mut w = Tensor::<f64>::zeros(&[3, 5]);
        for i in 0..3 {
            w.data_mut()[i * 5 + i] = 1.0;
        }
        let zero = Tensor::<f64>::zeros(&[5]);
        assert_eq!(dense(&h, &w, &zero).unwrap().data(), &[1.0, 2.0, 3.0, 0.0, 0.0]);

        let b = Tensor::new(vec![5], vec![0.5, -1.0, 2.0, 0.0, 3.0]).unwrap();
        assert_eq!(dense(&h, &Tensor::zeros(&[3, 5]), &b).unwrap().data(), b.data());

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = rand_tensor(&mut rng, &[7]);
        let w = rand_tensor(&mut rng, &[7, 4]);
        let b = rand_tensor(&mut rng, &[4]);
        let y = dense(&h, &w, &b).unwrap();
        for j in 0..4 {
            let want: f64 = b.data()[j] + (0..7).map(|i| h.data()[i] * w.at(&[i, j])).sum::<f64>();
            assert_abs_diff_eq!(y.data()[j], want, epsilon = 1e-5);
        }
        assert!(dense(&h, &Tensor::zeros(&[6, 4]), &b).is_err());
    }

    #[test]
    fn softmax_uniform_and_stable() {
        let (loss, probs) = softmax_xent(&[0.3f64; 4], 2).unwrap();
        assert_abs_diff_eq!(loss, 4f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-6);

        let (loss, probs) = softmax_xent(&[1000.0f32, 0.0], 0).unwrap();
        assert!(loss.is_finite() && loss.abs() < 1e-6);
        assert!(probs.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn softmax_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let k = rng.gen_range(2..8);
            let logits: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let label = rng.gen_range(0..k);
            let (_, probs) = softmax_xent(&logits, label).unwrap();
            let grad = softmax_xent_grad(&probs, label);
            let h = 1e-3;
            for j in 0..k {
                let mut up = logits.clone();
                up[j] += h;
                let mut dn = logits.clone();
                dn[j] -= h;
                let fd = (softmax_xent(&up, label).unwrap().0 - softmax_xent(&dn, label).unwrap().0) / (2.0 * h);
                let rel = (fd - grad[j]).abs() / fd.abs().max(grad[j].abs()).max(1e-8);
                assert!(rel < 1e-3, "logit {j}: analytic {} vs numeric {fd}", grad[j]);
            }
        }
    }

    #[test]
    fn bilstm_zero_weights_give_zero_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut lstm = BiLstm::<f64>::new("t", 3, 4, &mut rng);
        for l in [&mut lstm.forward, &mut lstm.backward] {
            for p in l.params_mut() {
                p.value.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let x = rand_tensor(&mut rng, &[5, 3]);
        let y = bilstm_forward(&x, &mut lstm).unwrap();
        assert_eq!(y.shape(), &[5, 8]);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bilstm_single_step_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut lstm = BiLstm::<f64>::new("t", 3, 4, &mut rng);
        let x = rand_tensor(&mut rng, &[1, 3]);
        assert_eq!(bilstm_forward(&x, &mut lstm).unwrap().shape(), &[1, 8]);
    }

    #[test]
    fn bilstm_time_reversal_swaps_directions() {
        // With the forward and backward cells sharing weights, reversing the
        // sequence maps h_fwd(t) onto h_bwd(L-1-t) and vice versa.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut lstm = BiLstm::<f64>::new("t", 3, 4, &mut rng);
        lstm.backward.wx.value = lstm.forward.wx.value.clone();
        lstm.backward.wh.value = lstm.forward.wh.value.clone();
        lstm.backward.bias.value = lstm.forward.bias.value.clone();
        let l = 6;
        let x = rand_tensor(&mut rng, &[l, 3]);
        let mut rev = Vec::new();
        for t in (0..l).rev() {
            rev.extend_from_slice(&x.data()[t * 3..(t + 1) * 3]);
        }
        let xr = Tensor::new(vec![l, 3], rev).unwrap();
        let y = bilstm_forward(&x, &mut lstm).unwrap();
        let yr = bilstm_forward(&xr, &mut lstm).unwrap();
        for t in 0..l {
            for j in 0..4 {
                assert_abs_diff_eq!(y.at(&[t, j]), yr.at(&[l - 1 - t, 4 + j]), epsilon = 1e-12);
                assert_abs_diff_eq!(y.at(&[t, 4 + j]), yr.at(&[l - 1 - t, j]), epsilon = 1e-12);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn strided_conv_and_pool_match_loops(
            c in 1usize..5, f in 1usize..5, k in 1usize..6, s in 1usize..4, extra in 0usize..20, d in 1usize..4, seed: u64,
        ) {
            let l = k + extra;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, w, b) = (rand_tensor(&mut rng, &[c, l]), rand_tensor(&mut rng, &[f, c, k]), rand_tensor(&mut rng, &[f]));
            let y = conv1d_forward(&x, &w, &b, s).unwrap();
            let out_len = (l - k) / s + 1;
            proptest::prop_assert_eq!(y.shape(), &[f, out_len][..]);
            for fi in 0..f {
                for t in 0..out_len {
                    let mut acc = b.data()[fi];
                    for ci in 0..c {
                        for i in 0..k {
                            acc += w.at(&[fi, ci, i]) * x.at(&[ci, t * s + i]);
                        }
                    }
                    proptest::prop_assert!((y.at(&[fi, t]) - acc.max(0.0)).abs() < 1e-12);
                }
            }
            // Single precision follows the same arithmetic.
            let cast = |t: &Tensor<f64>| Tensor::new(t.shape().to_vec(), t.data().iter().map(|&v| v as f32).collect()).unwrap();
            let y32 = conv1d_forward(&cast(&x), &cast(&w), &cast(&b), s).unwrap();
            for (a, e) in y32.data().iter().zip(y.data()) {
                proptest::prop_assert!((*a as f64 - e).abs() < 1e-5);
            }
            if out_len >= d {
                let p = maxpool1d(&y, d).unwrap();
                for fi in 0..f {
                    for j in 0..out_len / d {
                        let m = (0..d).map(|i| y.at(&[fi, j * d + i])).fold(f64::NEG_INFINITY, f64::max);
                        proptest::prop_assert_eq!(p.at(&[fi, j]), m);
                    }
                }
            }
        }
    }
}
