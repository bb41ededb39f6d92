use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ParamStore;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    pub seed: u64,
    /// Coordinates probed per parameter tensor; tensors smaller than this are
    /// probed exhaustively.
    pub coords_per_param: usize,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            seed: 0,
            coords_per_param: 8,
        }
    }
}

/// Compares analytic gradients against central finite differences.
///
/// `loss_and_grad` must evaluate the scalar loss at the store's current values
/// and leave `∂loss/∂value` in every parameter's `grad` (it is responsible for
/// zeroing them first). It is called once for the analytic gradient and twice
/// per probed coordinate; grads written by the probing calls are discarded.
///
/// Returns the largest `|analytic − fd| / max(1e-8, |analytic| + |fd|)` over
/// the probed coordinates. Parameter values are restored before returning.
pub fn gradient_check<F>(store: &mut ParamStore, mut loss_and_grad: F, opts: GradCheckOptions) -> Result<f64>
where
    F: FnMut(&mut ParamStore) -> Result<f64>,
{
    let base = loss_and_grad(store)?;
    if !base.is_finite() {
        return Err(Error::Numeric(format!("loss is not finite: {base}")));
    }
    let analytic: Vec<Vec<f64>> = store.iter().map(|p| p.grad.data().to_vec()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = 0.0f64;
    for pid in 0..store.len() {
        let n = store.get(pid).value.len();
        let coords: Vec<usize> = if n <= opts.coords_per_param {
            (0..n).collect()
        } else {
            let mut c = sample(&mut rng, n, opts.coords_per_param).into_vec();
            c.sort_unstable();
            c
        };
        for idx in coords {
            let orig = store.get(pid).value.data()[idx];
            store.get_mut(pid).value.data_mut()[idx] = orig + opts.step;
            let plus = loss_and_grad(store)?;
            store.get_mut(pid).value.data_mut()[idx] = orig - opts.step;
            let minus = loss_and_grad(store)?;
            store.get_mut(pid).value.data_mut()[idx] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numeric(format!(
                    "loss not finite while probing {}[{idx}]",
                    store.get(pid).name
                )));
            }
            let fd = (plus - minus) / (2.0 * opts.step);
            let a = analytic[pid][idx];
            let rel = (a - fd).abs() / (a.abs() + fd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    // leave the analytic gradient in place for callers that inspect it
    for (p, g) in store.iter_mut().zip(&analytic) {
        p.grad.data_mut().copy_from_slice(g);
    }
    Ok(worst)
}
