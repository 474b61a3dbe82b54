//! Central finite-difference check of every model parameter gradient.

use crate::error::Result;
use crate::linalg::Real;
use crate::model::{Batch, Mode, Model};

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub len: usize,
    /// Worst `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_error: f64,
    pub worst_index: usize,
}

/// Denominator floor for [`rel_error`]. Central differences of an f64 loss
/// with `h = 1e-5` carry round-off near `1e-11`, so components smaller than
/// this are effectively compared with an absolute tolerance of `floor · tol`.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// Relative error with a denominator floor for near-zero gradients.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares back-propagated gradients with `(L(θ+h) - L(θ-h)) / 2h` for
/// every scalar parameter. `mode` is reused for every evaluation, so a
/// `Mode::Train` seed keeps the dropout mask fixed.
pub fn check_model<T: Real>(
    model: &mut Model<T>,
    batch: &Batch<T>,
    labels: &[usize],
    mode: Mode,
    step: f64,
) -> Result<Vec<ParamCheck>> {
    model.zero_grad();
    model.loss_and_grad(batch, labels, mode)?;
    let analytic: Vec<Vec<f64>> = model
        .params()
        .iter()
        .map(|p| p.grad.iter().map(|g| g.as_f64()).collect())
        .collect();

    let mut out = Vec::with_capacity(analytic.len());
    for (pi, grads) in analytic.iter().enumerate() {
        let (name, len) = {
            let p = &model.params()[pi];
            (p.name.clone(), p.len())
        };
        let mut worst = (0.0f64, 0usize);
        for (j, &g) in grads.iter().enumerate() {
            let orig = model.params()[pi].value[j];
            model.params_mut()[pi].value[j] = T::from_f64(orig.as_f64() + step);
            let up = model.loss(batch, labels, mode)?.as_f64();
            model.params_mut()[pi].value[j] = T::from_f64(orig.as_f64() - step);
            let down = model.loss(batch, labels, mode)?.as_f64();
            model.params_mut()[pi].value[j] = orig;
            let numeric = (up - down) / (2.0 * step);
            let err = rel_error(g, numeric);
            if err > worst.0 {
                worst = (err, j);
            }
        }
        out.push(ParamCheck { name, len, max_rel_error: worst.0, worst_index: worst.1 });
    }
    Ok(out)
}
