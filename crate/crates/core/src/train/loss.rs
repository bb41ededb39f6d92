use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const PROB_CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy over probabilities clamped to
/// `[1e-12, 1 - 1e-12]`, with positives weighted by `pos_weight`.
///
/// The gradient is the exact derivative of the clamped loss, so it is zero
/// for any probability sitting outside the clamp range.
pub fn bce_loss(probs: &Tensor, labels: &[u8], pos_weight: f64) -> Result<(f64, Tensor)> {
    if probs.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} probabilities for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let n = labels.len() as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(labels.len());
    for (&p, &y) in probs.data().iter().zip(labels) {
        let q = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let inside = p == q;
        if y == 1 {
            total -= pos_weight * q.ln();
            grad.push(if inside { -pos_weight / (q * n) } else { 0.0 });
        } else {
            total -= (1.0 - q).ln();
            grad.push(if inside { 1.0 / ((1.0 - q) * n) } else { 0.0 });
        }
    }
    Ok((total / n, Tensor::new(probs.shape().to_vec(), grad)?))
}
