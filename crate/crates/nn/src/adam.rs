//! Adam with bias-corrected moment estimates.

use crate::error::{shape_err, Result};
use crate::linalg::Real;
use crate::param::Param;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment buffers, allocated on the first step and shape-checked afterwards.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, step: 0, first: Vec::new(), second: Vec::new() }
    }

    /// One update over parallel parameter/gradient slices.
    pub fn step_slices(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != grads.len() {
            return shape_err(format!("{} parameter buffers but {} gradients", params.len(), grads.len()));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != g.len() {
                return shape_err(format!("parameter {i}: {} values but {} gradients", p.len(), g.len()));
            }
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.second = self.first.clone();
        } else if self.first.len() != params.len()
            || self.first.iter().zip(params.iter()).any(|(m, p)| m.len() != p.len())
        {
            return shape_err("parameter shapes changed between optimizer steps");
        }

        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let (b1, b2) = (T::from_f64(c.beta1), T::from_f64(c.beta2));
        let (ob1, ob2) = (T::from_f64(1.0 - c.beta1), T::from_f64(1.0 - c.beta2));
        let (lr, eps) = (T::from_f64(c.lr), T::from_f64(c.eps));
        let (bc1, bc2) = (T::from_f64(bc1), T::from_f64(bc2));
        for (i, p) in params.iter_mut().enumerate() {
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for j in 0..p.len() {
                let g = grads[i][j];
                m[j] = b1 * m[j] + ob1 * g;
                v[j] = b2 * v[j] + ob2 * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    pub fn step_params(&mut self, params: &mut [&mut Param<T>]) -> Result<()> {
        let grads: Vec<Vec<T>> = params.iter().map(|p| p.grad.clone()).collect();
        let grad_refs: Vec<&[T]> = grads.iter().map(Vec::as_slice).collect();
        let mut values: Vec<&mut [T]> = params.iter_mut().map(|p| p.value.as_mut_slice()).collect();
        self.step_slices(&mut values, &grad_refs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut st = AdamState::<f64>::new(AdamConfig::default());
        let mut p = vec![1.0, -2.0, 3.0];
        for _ in 0..3 {
            st.step_slices(&mut [&mut p], &[&[0.0, 0.0, 0.0]]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(st.step, 3);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut st = AdamState::<f64>::new(AdamConfig::default());
        let g = [0.5, -3.0, 1e-2, -7.0];
        let mut p = vec![0.0; 4];
        st.step_slices(&mut [&mut p], &[&g]).unwrap();
        for (pj, gj) in p.iter().zip(g) {
            // m_hat = g, v_hat = g^2 after bias correction
            let want = -1e-3 * gj / (gj.abs() + 1e-8);
            assert_abs_diff_eq!(*pj, want, epsilon = 1e-12);
            assert_abs_diff_eq!(*pj, -1e-3 * gj.signum(), epsilon = 1e-6);
        }
    }

    #[test]
    fn scalar_two_step_hand_trace() {
        // x0 = 1, g = 2 both steps.
        // step 1: m=0.2, v=0.004, m_hat=2, v_hat=4, x1 = 1 - 0.001*2/(2+1e-8)
        // step 2: m=0.38, v=0.007996, m_hat=0.38/0.19=2, v_hat=0.007996/0.001999=4
        let mut st = AdamState::<f64>::new(AdamConfig::default());
        let mut x = vec![1.0];
        st.step_slices(&mut [&mut x], &[&[2.0]]).unwrap();
        let x1 = 1.0 - 0.001 * 2.0 / (2.0 + 1e-8);
        assert_abs_diff_eq!(x[0], x1, epsilon = 1e-15);
        st.step_slices(&mut [&mut x], &[&[2.0]]).unwrap();
        let m_hat = 0.38 / (1.0 - 0.81);
        let v_hat = 0.007996 / (1.0 - 0.998001);
        let x2 = x1 - 0.001 * m_hat / (f64::sqrt(v_hat) + 1e-8);
        assert_abs_diff_eq!(x[0], x2, epsilon = 1e-12);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut st = AdamState::<f32>::new(AdamConfig::default());
        let mut p = vec![0.0f32; 3];
        assert!(st.step_slices(&mut [&mut p], &[&[1.0, 2.0]]).is_err());
        st.step_slices(&mut [&mut p], &[&[1.0, 2.0, 3.0]]).unwrap();
        let mut q = vec![0.0f32; 4];
        assert!(st.step_slices(&mut [&mut q], &[&[1.0; 4]]).is_err());
    }
}
