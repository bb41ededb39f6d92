//! Seeded permutation feature importance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::FeatureFrame;
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::model::Classifier;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub index: usize,
    /// Mean of `baseline − permuted` over repeats.
    pub mean_drop: f64,
    /// Sample standard deviation of the drops (0 for a single repeat).
    pub std_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub metric: Metric,
    pub baseline: f64,
    pub repeats: usize,
    pub seed: u64,
    /// Sorted by descending `mean_drop`, ties by feature index.
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,mean_drop,std_drop\n");
        for e in &self.entries {
            out.push_str(&format!("{},{:?},{:?}\n", e.feature, e.mean_drop, e.std_drop));
        }
        out
    }

    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature)
    }
}

/// RNG for one `(feature, repeat)` cell, independent of every other cell.
fn cell_rng(seed: u64, feature: usize, repeat: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((feature as u64) << 32) | repeat as u64);
    rng
}

/// For each feature, shuffles that column within `frame`, re-scores, and
/// records the metric drop. The model is only read.
pub fn permutation_importance<M: Classifier + ?Sized>(
    model: &M,
    frame: &FeatureFrame,
    metric: Metric,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if repeats == 0 {
        return Err(Error::Argument("repeats must be at least 1".into()));
    }
    if !frame.is_standardized() {
        return Err(Error::Data("permutation importance expects a standardized frame".into()));
    }
    let labels = frame.labels();
    let baseline = metric.evaluate(&model.predict(frame.x())?, labels)?;
    let (n, f) = (frame.n_rows(), frame.n_features());
    let mut entries = Vec::with_capacity(f);
    for j in 0..f {
        let original = frame.column(j);
        let mut drops = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let mut col = original.clone();
            col.shuffle(&mut cell_rng(seed, j, r));
            let mut x = frame.x().clone();
            for (i, v) in col.into_iter().enumerate() {
                x.data_mut()[i * f + j] = v;
            }
            debug_assert_eq!(x.len(), n * f);
            drops.push(baseline - metric.evaluate(&model.predict(&x)?, labels)?);
        }
        let mean = drops.iter().sum::<f64>() / repeats as f64;
        let std = if repeats > 1 {
            (drops.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (repeats - 1) as f64).sqrt()
        } else {
            0.0
        };
        entries.push(ImportanceEntry {
            feature: frame.feature_names()[j].clone(),
            index: j,
            mean_drop: mean,
            std_drop: std,
        });
    }
    entries.sort_by(|a, b| b.mean_drop.total_cmp(&a.mean_drop).then(a.index.cmp(&b.index)));
    Ok(ImportanceReport {
        metric,
        baseline,
        repeats,
        seed,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{standardize_apply, standardize_fit, SplitTag};
    use crate::model::LogisticModel;
    use crate::tensor::Tensor;

    fn frame() -> FeatureFrame {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let a = (i as f64 * 0.37).sin();
                let b = (i as f64 * 1.3).cos();
                vec![a, b, (i % 7) as f64]
            })
            .collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] > 0.0)).collect();
        let raw = FeatureFrame::new(
            vec!["a".into(), "b".into(), "c".into()],
            Tensor::from_rows(&rows).unwrap(),
            y,
        )
        .unwrap()
        .tagged(SplitTag::Train);
        standardize_apply(&raw, &standardize_fit(&raw).unwrap()).unwrap()
    }

    fn model() -> LogisticModel {
        let mut m = LogisticModel::new(3).unwrap();
        m.params_mut().get_mut(0).value.data_mut().copy_from_slice(&[4.0, 0.0, 0.5]);
        m
    }

    #[test]
    fn unused_feature_has_zero_drop_and_dominant_ranks_first() {
        let r = permutation_importance(&model(), &frame(), Metric::Auc, 5, 1).unwrap();
        assert_eq!(r.entries[0].feature, "a");
        let b = &r.entries[r.rank_of("b").unwrap()];
        assert_eq!(b.mean_drop, 0.0);
        assert_eq!(b.std_drop, 0.0);
    }

    #[test]
    fn baseline_matches_direct_evaluation() {
        let (m, f) = (model(), frame());
        let r = permutation_importance(&m, &f, Metric::Ks, 2, 3).unwrap();
        assert_eq!(r.baseline, Metric::Ks.evaluate(&m.predict(f.x()).unwrap(), f.labels()).unwrap());
    }

    #[test]
    fn report_is_a_permutation_of_features_and_deterministic() {
        let r1 = permutation_importance(&model(), &frame(), Metric::Auc, 3, 9).unwrap();
        let r2 = permutation_importance(&model(), &frame(), Metric::Auc, 3, 9).unwrap();
        assert_eq!(r1, r2);
        let mut idx: Vec<_> = r1.entries.iter().map(|e| e.index).collect();
        idx.sort();
        assert_eq!(idx, [0, 1, 2]);
        assert!(r1.to_csv().starts_with("feature,mean_drop,std_drop\n"));
    }

    #[test]
    fn each_cell_uses_its_own_stream() {
        let (m, f) = (model(), frame());
        let r = permutation_importance(&m, &f, Metric::Auc, 1, 5).unwrap();
        let base = Metric::Auc.evaluate(&m.predict(f.x()).unwrap(), f.labels()).unwrap();
        for j in 0..3 {
            let mut col = f.column(j);
            col.shuffle(&mut cell_rng(5, j, 0));
            let shuffled = f.with_column(j, &col).unwrap();
            let drop = base - Metric::Auc.evaluate(&m.predict(shuffled.x()).unwrap(), f.labels()).unwrap();
            let e = r.entries.iter().find(|e| e.index == j).unwrap();
            assert_eq!(e.mean_drop, drop);
        }
    }

    #[test]
    fn zero_repeats_rejected() {
        assert!(matches!(
            permutation_importance(&model(), &frame(), Metric::Auc, 0, 0),
            Err(Error::Argument(_))
        ));
    }
}
