//! Objective, optimizers, the epoch loop and the experiment runners built on it.

mod experiments;
mod loss;
mod optim;

pub use experiments::{ablate, sweep_lr, sweep_opt, train_baseline_logistic, SweepRow, SweepTable, DEFAULT_LR_GRID};
pub use loss::{bce_loss, PROB_CLAMP};
pub use optim::{adam_step, sgd_step, AdamConfig, AdamState, Optimizer, OptimizerKind};

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{FeatureFrame, SplitTag, Splits};
use crate::error::{Error, Result};
use crate::metrics::{self, Metric, MetricsRecord};
use crate::model::{Classifier, HybridModel, ModelConfig};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStop {
    /// Validation metric to maximize.
    pub metric: Metric,
    /// Epochs without improvement before stopping.
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub shuffle: bool,
    pub early_stop: Option<EarlyStop>,
    /// Weight on the positive-class term of the loss.
    pub pos_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 100,
            seed: 0,
            adam: AdamConfig::default(),
            shuffle: true,
            early_stop: Some(EarlyStop {
                metric: Metric::Auc,
                patience: 10,
            }),
            pos_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate {} must be finite and positive", self.learning_rate));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be at least 1".into());
        }
        for (name, b) in [("beta1", self.adam.beta1), ("beta2", self.adam.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return bad(format!("adam {name} {b} must lie in (0, 1)"));
            }
        }
        if !(self.adam.eps > 0.0) {
            return bad("adam eps must be positive".into());
        }
        if !(self.pos_weight.is_finite() && self.pos_weight > 0.0) {
            return bad(format!("pos_weight {} must be finite and positive", self.pos_weight));
        }
        if matches!(self.early_stop, Some(EarlyStop { patience: 0, .. })) {
            return bad("early_stop patience must be at least 1".into());
        }
        Ok(())
    }
}

/// Stable hash of a serializable configuration (sha256 of its JSON).
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let json = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&json)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean over the epoch's mini-batches, taken before each update.
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub val_auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub train: MetricsRecord,
    pub val: MetricsRecord,
    pub test: MetricsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: String,
    pub config_hash: String,
    pub epochs_run: usize,
    /// Epoch whose parameters were kept (the last one without early stopping).
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub curves: Vec<EpochRecord>,
    pub final_metrics: SplitMetrics,
    /// Not serialized, so identical runs give identical report files.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl RunReport {
    /// `epoch,train_loss,train_acc,test_loss,test_acc`, one row per epoch.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,test_loss,test_acc\n");
        for r in &self.curves {
            out.push_str(&format!(
                "{},{:?},{:?},{:?},{:?}\n",
                r.epoch, r.train_loss, r.train_acc, r.test_loss, r.test_acc
            ));
        }
        out
    }
}

fn batch_of(frame: &FeatureFrame, idx: &[usize]) -> Result<(Tensor, Vec<u8>)> {
    let f = frame.n_features();
    let mut data = Vec::with_capacity(idx.len() * f);
    let mut labels = Vec::with_capacity(idx.len());
    for &i in idx {
        data.extend_from_slice(frame.row(i));
        labels.push(frame.labels()[i]);
    }
    Ok((Tensor::new(vec![idx.len(), f], data)?, labels))
}

/// Scores for every row of a frame.
pub fn predict_frame<M: Classifier + ?Sized>(model: &M, frame: &FeatureFrame) -> Result<Vec<f64>> {
    model.predict(frame.x())
}

fn loss_and_acc(probs: &[f64], frame: &FeatureFrame, pos_weight: f64) -> Result<(f64, f64)> {
    let (loss, _) = bce_loss(&Tensor::vector(probs.to_vec()), frame.labels(), pos_weight)?;
    Ok((loss, metrics::accuracy(probs, frame.labels(), 0.5)?))
}

fn check_splits(splits: &Splits, n_features: usize) -> Result<()> {
    for (frame, tag) in [
        (&splits.train, SplitTag::Train),
        (&splits.val, SplitTag::Val),
        (&splits.test, SplitTag::Test),
    ] {
        if frame.tag() != tag {
            return Err(Error::Data(format!("expected the {tag} split, got a frame tagged {}", frame.tag())));
        }
        if !frame.is_standardized() {
            return Err(Error::Data(format!("the {tag} split has not been standardized")));
        }
        if frame.n_features() != n_features {
            return Err(Error::Dimension(format!(
                "the {tag} split has {} features, model expects {n_features}",
                frame.n_features()
            )));
        }
    }
    Ok(())
}

fn with_position(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::Numeric(m) => Error::Numeric(format!("diverged at epoch {epoch}, batch {batch}: {m}")),
        other => other,
    }
}

/// Runs the epoch loop on an already-built model.
///
/// Train curves average the per-batch losses and accuracies seen during the
/// epoch; validation and test curves re-score those splits after it. With
/// early stopping, the parameters from the best validation epoch are restored
/// at the end.
pub fn fit<M: Classifier + ?Sized>(
    model: &mut M,
    cfg: &TrainConfig,
    splits: &Splits,
    label: &str,
    hash: String,
) -> Result<RunReport> {
    cfg.validate()?;
    check_splits(splits, model.n_features())?;
    let start = Instant::now();
    let train = &splits.train;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.n_rows()).collect();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, cfg.adam);
    let mut curves = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut stopped_early = false;

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let (x, y) = batch_of(train, idx)?;
            model.params_mut().zero_grads();
            let (loss, probs) = model
                .forward_backward(&x, &mut |p| bce_loss(p, &y, cfg.pos_weight))
                .map_err(|e| with_position(e, epoch, b))?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("loss {loss} at epoch {epoch}, batch {b}")));
            }
            loss_sum += loss * idx.len() as f64;
            correct += probs.iter().zip(&y).filter(|&(&p, &l)| (p >= 0.5) == (l == 1)).count();
            opt.step(model.params_mut()).map_err(|e| with_position(e, epoch, b))?;
        }

        let train_loss = loss_sum / train.n_rows() as f64;
        let train_acc = correct as f64 / train.n_rows() as f64;
        let test_probs = predict_frame(model, &splits.test)?;
        let (test_loss, test_acc) = loss_and_acc(&test_probs, &splits.test, cfg.pos_weight)?;
        let val_probs = predict_frame(model, &splits.val)?;
        let val_auc = metrics::auc(&val_probs, splits.val.labels())?;
        curves.push(EpochRecord {
            epoch,
            train_loss,
            train_acc,
            test_loss,
            test_acc,
            val_auc,
        });
        if !train_loss.is_finite() {
            return Err(Error::Numeric(format!("train loss {train_loss} after epoch {epoch}")));
        }

        if let Some(es) = cfg.early_stop {
            let score = match es.metric {
                Metric::Auc => val_auc,
                m => m.evaluate(&val_probs, splits.val.labels())?,
            };
            match &best {
                Some((b, _, _)) if score <= *b => {}
                _ => best = Some((score, epoch, model.params().flat_values())),
            }
            let best_epoch = best.as_ref().map_or(epoch, |b| b.1);
            if epoch - best_epoch >= es.patience {
                stopped_early = epoch < cfg.epochs;
                break;
            }
        }
    }

    let epochs_run = curves.len();
    let best_epoch = match best {
        Some((_, epoch, values)) => {
            let mut offset = 0;
            for p in model.params_mut().iter_mut() {
                let n = p.value.len();
                p.value.data_mut().copy_from_slice(&values[offset..offset + n]);
                offset += n;
            }
            epoch
        }
        None => epochs_run,
    };
    let final_metrics = SplitMetrics {
        train: metrics::evaluate(&predict_frame(model, train)?, train.labels())?,
        val: metrics::evaluate(&predict_frame(model, &splits.val)?, splits.val.labels())?,
        test: metrics::evaluate(&predict_frame(model, &splits.test)?, splits.test.labels())?,
    };
    Ok(RunReport {
        model: label.to_string(),
        config_hash: hash,
        epochs_run,
        best_epoch,
        stopped_early,
        curves,
        final_metrics,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Builds a model from `model_cfg` (initialized from its seed) and trains it.
pub fn train(model_cfg: &ModelConfig, train_cfg: &TrainConfig, splits: &Splits) -> Result<(HybridModel, RunReport)> {
    let mut model = HybridModel::new(model_cfg.clone(), splits.train.n_features())?;
    let hash = config_hash(&(model_cfg, train_cfg))?;
    let report = fit(&mut model, train_cfg, splits, model_cfg.variant.as_str(), hash)?;
    Ok((model, report))
}
