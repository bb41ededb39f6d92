//! The hybrid CNN + Transformer classifier, its ablations and a logistic
//! baseline.

pub mod attention;
mod checkpoint;
mod config;
mod network;

pub use attention::{attention, attention_backward, AttentionCache};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC};
pub use config::{AttnConfig, ConvConfig, ModelConfig, Variant};
pub use network::{init_params, parameter_count, ForwardTrace, HybridModel};

use crate::error::{Error, Result};
use crate::tensor::{sigmoid_scalar, ParamStore, Tensor};

/// Upstream loss: maps batch probabilities to `(loss, ∂loss/∂probs)`.
pub type LossFn<'a> = dyn FnMut(&Tensor) -> Result<(f64, Tensor)> + 'a;

/// What the training loop needs from a model.
pub trait Classifier {
    fn n_features(&self) -> usize;
    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;
    fn predict(&self, batch: &Tensor) -> Result<Vec<f64>>;
    /// Forward pass, loss, and gradient accumulation into the parameter grads.
    /// Returns the loss and the batch probabilities.
    fn forward_backward(&mut self, batch: &Tensor, loss: &mut LossFn<'_>) -> Result<(f64, Vec<f64>)>;
}

impl Classifier for HybridModel {
    fn n_features(&self) -> usize {
        HybridModel::n_features(self)
    }

    fn params(&self) -> &ParamStore {
        HybridModel::params(self)
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        HybridModel::params_mut(self)
    }

    fn predict(&self, batch: &Tensor) -> Result<Vec<f64>> {
        HybridModel::predict(self, batch)
    }

    fn forward_backward(&mut self, batch: &Tensor, loss: &mut LossFn<'_>) -> Result<(f64, Vec<f64>)> {
        let (probs, mut trace) = self.forward(batch)?;
        let (value, grad) = loss(&probs)?;
        self.backward(&mut trace, &grad)?;
        Ok((value, probs.into_data()))
    }
}

/// `sigmoid(x · w + b)`.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    n_features: usize,
    store: ParamStore,
}

impl LogisticModel {
    /// Starts from all-zero weights, so every initial prediction is 0.5.
    pub fn new(n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Config("n_features must be at least 1".into()));
        }
        let mut store = ParamStore::new();
        store.push("linear.weight", Tensor::zeros(&[n_features]))?;
        store.push("linear.bias", Tensor::zeros(&[1]))?;
        Ok(Self { n_features, store })
    }

    pub fn from_params(n_features: usize, store: ParamStore) -> Result<Self> {
        let mut model = Self::new(n_features)?;
        model.store.copy_values_from(&store)?;
        Ok(model)
    }

    fn check(&self, batch: &Tensor) -> Result<usize> {
        let (b, f) = batch.dims2()?;
        if f != self.n_features {
            return Err(Error::Dimension(format!(
                "batch has {f} features, model expects {}",
                self.n_features
            )));
        }
        Ok(b)
    }
}

impl Classifier for LogisticModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn predict(&self, batch: &Tensor) -> Result<Vec<f64>> {
        let b = self.check(batch)?;
        let w = self.store.value(0).data();
        let bias = self.store.value(1).data()[0];
        Ok((0..b)
            .map(|i| {
                let z: f64 = batch.row(i).iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + bias;
                sigmoid_scalar(z)
            })
            .collect())
    }

    fn forward_backward(&mut self, batch: &Tensor, loss: &mut LossFn<'_>) -> Result<(f64, Vec<f64>)> {
        let probs = self.predict(batch)?;
        let (value, grad) = loss(&Tensor::vector(probs.clone()))?;
        let mut gw = vec![0.0; self.n_features];
        let mut gb = 0.0;
        for (i, (&p, &g)) in probs.iter().zip(grad.data()).enumerate() {
            let gz = g * p * (1.0 - p);
            gb += gz;
            for (o, x) in gw.iter_mut().zip(batch.row(i)) {
                *o += gz * x;
            }
        }
        for (o, g) in self.store.grad_mut(0).data_mut().iter_mut().zip(gw) {
            *o += g;
        }
        self.store.grad_mut(1).data_mut()[0] += gb;
        Ok((value, probs))
    }
}

/// Either model kind, for code that loads whatever a checkpoint holds.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Hybrid(HybridModel),
    Logistic(LogisticModel),
}

impl AnyModel {
    /// `"hybrid"` or `"logistic"`.
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Hybrid(_) => "hybrid",
            AnyModel::Logistic(_) => "logistic",
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            AnyModel::Hybrid(m) => m,
            AnyModel::Logistic(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Classifier {
        match self {
            AnyModel::Hybrid(m) => m,
            AnyModel::Logistic(m) => m,
        }
    }
}

impl Classifier for AnyModel {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn params(&self) -> &ParamStore {
        self.inner().params()
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        self.inner_mut().params_mut()
    }

    fn predict(&self, batch: &Tensor) -> Result<Vec<f64>> {
        self.inner().predict(batch)
    }

    fn forward_backward(&mut self, batch: &Tensor, loss: &mut LossFn<'_>) -> Result<(f64, Vec<f64>)> {
        self.inner_mut().forward_backward(batch, loss)
    }
}
