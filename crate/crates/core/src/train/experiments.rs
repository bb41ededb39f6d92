use serde::{Deserialize, Serialize};

use super::{config_hash, fit, train, OptimizerKind, RunReport, SplitMetrics, TrainConfig};
use crate::data::Splits;
use crate::error::{Error, Result};
use crate::model::{LogisticModel, ModelConfig, Variant};

/// Learning rates of the sensitivity table.
pub const DEFAULT_LR_GRID: [f64; 4] = [0.005, 0.003, 0.002, 0.001];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub variant: String,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub config_hash: String,
    pub metrics: Option<SplitMetrics>,
    pub epochs_run: Option<usize>,
    /// Set when this run failed; the other rows are still produced.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub kind: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Test-split metrics per row, one line each.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,variant,optimizer,learning_rate,acc,auc,ks,error\n");
        for r in &self.rows {
            let (acc, auc, ks) = match &r.metrics {
                Some(m) => (
                    format!("{:?}", m.test.acc),
                    format!("{:?}", m.test.auc),
                    format!("{:?}", m.test.ks),
                ),
                None => Default::default(),
            };
            let error = r.error.as_deref().unwrap_or("").replace([',', '\n'], " ");
            out.push_str(&format!(
                "{},{},{},{:?},{acc},{auc},{ks},{error}\n",
                r.label, r.variant, r.optimizer, r.learning_rate
            ));
        }
        out
    }

    pub fn row(&self, label: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

fn run_row(label: String, model_cfg: &ModelConfig, train_cfg: &TrainConfig, splits: &Splits) -> Result<SweepRow> {
    let hash = config_hash(&(model_cfg, train_cfg))?;
    let (metrics, epochs_run, error) = match train(model_cfg, train_cfg, splits) {
        Ok((_, report)) => (Some(report.final_metrics), Some(report.epochs_run), None),
        // invalid configs are the caller's fault, not a per-run failure
        Err(e @ Error::Config(_)) => return Err(e),
        Err(e) => {
            log::warn!("run {label} failed: {e}");
            (None, None, Some(e.to_string()))
        }
    };
    Ok(SweepRow {
        label,
        variant: model_cfg.variant.to_string(),
        optimizer: train_cfg.optimizer,
        learning_rate: train_cfg.learning_rate,
        config_hash: hash,
        metrics,
        epochs_run,
        error,
    })
}

fn require_grid(lrs: &[f64]) -> Result<()> {
    if lrs.is_empty() {
        return Err(Error::Config("learning-rate grid is empty".into()));
    }
    Ok(())
}

/// One run per learning rate, everything else held fixed.
pub fn sweep_lr(model_cfg: &ModelConfig, base: &TrainConfig, lrs: &[f64], splits: &Splits) -> Result<SweepTable> {
    require_grid(lrs)?;
    let rows = lrs
        .iter()
        .map(|&lr| {
            let cfg = TrainConfig {
                learning_rate: lr,
                ..base.clone()
            };
            run_row(format!("lr={lr}"), model_cfg, &cfg, splits)
        })
        .collect::<Result<_>>()?;
    Ok(SweepTable {
        kind: "sweep-lr".into(),
        rows,
    })
}

/// The full `{sgd, adam} × lrs` grid.
pub fn sweep_opt(model_cfg: &ModelConfig, base: &TrainConfig, lrs: &[f64], splits: &Splits) -> Result<SweepTable> {
    require_grid(lrs)?;
    let mut rows = Vec::new();
    for optimizer in [OptimizerKind::Sgd, OptimizerKind::Adam] {
        for &lr in lrs {
            let cfg = TrainConfig {
                optimizer,
                learning_rate: lr,
                ..base.clone()
            };
            rows.push(run_row(format!("{optimizer}@{lr}"), model_cfg, &cfg, splits)?);
        }
    }
    Ok(SweepTable {
        kind: "sweep-opt".into(),
        rows,
    })
}

/// `cnn_only`, `transformer_only` and `hybrid`, sharing seeds and data.
pub fn ablate(model_cfg: &ModelConfig, train_cfg: &TrainConfig, splits: &Splits) -> Result<SweepTable> {
    let rows = Variant::ALL
        .iter()
        .map(|&v| run_row(v.to_string(), &model_cfg.with_variant(v), train_cfg, splits))
        .collect::<Result<_>>()?;
    Ok(SweepTable {
        kind: "ablate".into(),
        rows,
    })
}

/// Logistic regression trained with the same loop and settings.
pub fn train_baseline_logistic(train_cfg: &TrainConfig, splits: &Splits) -> Result<(LogisticModel, RunReport)> {
    let mut model = LogisticModel::new(splits.train.n_features())?;
    let hash = config_hash(&("logistic", train_cfg))?;
    let report = fit(&mut model, train_cfg, splits, "logistic", hash)?;
    Ok((model, report))
}
