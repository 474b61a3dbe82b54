//! Forward moving-average denoising.

use crate::error::{Error, Result};
use crate::signal::{ImuSample, LabeledStream, CHANNELS};

/// Moving-average window size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaSpec {
    n: usize,
}

impl MaSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("moving-average window must be >= 1".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// `out[t] = mean(x[t..t+n])` for `t in 0..=L-n`.
///
/// Computed with a running sum; output length is `L - n + 1`.
pub fn moving_average(signal: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("moving-average window must be >= 1".into()));
    }
    if n > signal.len() {
        return Err(Error::TooShort(format!(
            "moving-average window {n} exceeds signal length {}",
            signal.len()
        )));
    }
    if n == 1 {
        return Ok(signal.to_vec());
    }
    let inv = 1.0 / n as f64;
    let mut sum: f64 = signal[..n].iter().sum();
    let mut out = Vec::with_capacity(signal.len() - n + 1);
    out.push(sum * inv);
    for t in 1..=signal.len() - n {
        sum += signal[t + n - 1] - signal[t - 1];
        out.push(sum * inv);
    }
    Ok(out)
}

/// Filters all six channels of a stream with the same window. Output sample
/// `t` keeps the time index and label of input sample `t`.
pub fn denoise_stream(stream: &LabeledStream, spec: MaSpec) -> Result<LabeledStream> {
    let n = spec.n();
    if stream.len() < n {
        return Err(Error::TooShort(format!(
            "stream of {} samples is shorter than moving-average window {n}",
            stream.len()
        )));
    }
    let out_len = stream.len() - n + 1;
    let mut filtered: Vec<Vec<f64>> = Vec::with_capacity(CHANNELS);
    for c in 0..CHANNELS {
        let ch: Vec<f64> = stream.samples.iter().map(|s| s.channels()[c]).collect();
        filtered.push(moving_average(&ch, n)?);
    }
    let samples = (0..out_len)
        .map(|t| {
            let mut c = [0.0; CHANNELS];
            for (i, col) in filtered.iter().enumerate() {
                c[i] = col[t];
            }
            ImuSample::from_channels(c, stream.samples[t].t)
        })
        .collect();
    Ok(LabeledStream {
        subject: stream.subject,
        samples,
        labels: stream.labels[..out_len].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn brute(x: &[f64], n: usize) -> Vec<f64> {
        (0..=x.len() - n).map(|t| x[t..t + n].iter().sum::<f64>() / n as f64).collect()
    }

    #[test]
    fn hand_case() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), vec![1.5, 2.5, 3.5]);
    }

    #[test]
    fn identity_constant_and_errors() {
        let x = [3.0, -1.0, 7.5];
        assert_eq!(moving_average(&x, 1).unwrap(), x.to_vec());
        let c = moving_average(&[2.5; 10], 4).unwrap();
        assert_eq!(c.len(), 7);
        assert!(c.iter().all(|&v| (v - 2.5).abs() < 1e-15));
        assert!(matches!(moving_average(&x, 4), Err(Error::TooShort(_))));
        assert!(moving_average(&x, 0).is_err());
        assert!(MaSpec::new(0).is_err());
    }

    fn noise_stream(len: usize, seed: u64) -> LabeledStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..len)
            .map(|t| {
                let mut c = [0.0; CHANNELS];
                for v in &mut c {
                    *v = StandardNormal.sample(&mut rng);
                }
                ImuSample::from_channels(c, t as u64)
            })
            .collect();
        LabeledStream { subject: 0, samples, labels: vec![0; len] }
    }

    #[test]
    fn stream_length_shrinks() {
        let s = noise_stream(1000, 1);
        let d = denoise_stream(&s, MaSpec::new(10).unwrap()).unwrap();
        assert_eq!(d.len(), 991);
        assert_eq!(d.labels.len(), 991);
        assert!(denoise_stream(&noise_stream(5, 1), MaSpec::new(10).unwrap()).is_err());
    }

    #[test]
    fn white_noise_variance_shrinks_by_n() {
        let s = noise_stream(200_000, 2);
        for n in [10, 25, 50] {
            let d = denoise_stream(&s, MaSpec::new(n).unwrap()).unwrap();
            for c in 0..CHANNELS {
                let xs: Vec<f64> = d.samples.iter().map(|s| s.channels()[c]).collect();
                let m = xs.iter().sum::<f64>() / xs.len() as f64;
                let var = xs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / xs.len() as f64;
                let ratio = var * n as f64;
                assert!((ratio - 1.0).abs() < 0.15, "n={n} c={c} ratio={ratio}");
            }
        }
    }

    #[test]
    fn step_edge_spans_n_minus_one_samples() {
        let n = 5;
        let x: Vec<f64> = (0..20).map(|t| if t < 10 { 0.0 } else { 1.0 }).collect();
        let y = moving_average(&x, n).unwrap();
        let ramp = y.iter().filter(|&&v| v > 0.0 && v < 1.0).count();
        assert_eq!(ramp, n - 1);
        // first window touching the step
        assert_abs_diff_eq!(y[6], 1.0 / n as f64, epsilon = 1e-15);
    }

    #[test]
    fn labels_follow_first_sample() {
        let mut s = noise_stream(12, 3);
        s.labels = [0; 6].into_iter().chain([1; 6]).collect();
        let d = denoise_stream(&s, MaSpec::new(3).unwrap()).unwrap();
        assert_eq!(d.labels, s.labels[..10].to_vec());
        assert_eq!(d.samples[4].t, 4);
    }

    proptest! {
        #[test]
        fn running_sum_equals_brute_force(x in prop::collection::vec(-100.0f64..100.0, 1..300), n in 1usize..60) {
            prop_assume!(n <= x.len());
            let fast = moving_average(&x, n).unwrap();
            for (a, b) in fast.iter().zip(brute(&x, n)) {
                prop_assert!((a - b).abs() < 1e-12 * 100.0f64.max(b.abs()));
            }
        }

        #[test]
        fn linear(x in prop::collection::vec(-10.0f64..10.0, 60), y in prop::collection::vec(-10.0f64..10.0, 60),
                  a in -3.0f64..3.0, b in -3.0f64..3.0, n in 1usize..30) {
            let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let lhs = moving_average(&combo, n).unwrap();
            let mx = moving_average(&x, n).unwrap();
            let my = moving_average(&y, n).unwrap();
            for i in 0..lhs.len() {
                prop_assert!((lhs[i] - (a * mx[i] + b * my[i])).abs() < 1e-12);
            }
        }

        #[test]
        fn bounded_by_window_extremes(x in prop::collection::vec(-50.0f64..50.0, 1..200), n in 1usize..40) {
            prop_assume!(n <= x.len());
            let y = moving_average(&x, n).unwrap();
            for (t, v) in y.iter().enumerate() {
                let w = &x[t..t + n];
                let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
            }
        }
    }
}
