//! Accuracy, ROC-AUC and the Kolmogorov–Smirnov statistic.
//!
//! AUC and KS are computed from tie-grouped score sweeps using integer counts,
//! so they agree bit-for-bit with the quadratic pairwise definitions.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub acc: f64,
    pub auc: f64,
    pub ks: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Which scalar a caller wants out of [`MetricsRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Acc,
    Auc,
    Ks,
}

impl Metric {
    pub fn evaluate(self, scores: &[f64], labels: &[u8]) -> Result<f64> {
        match self {
            Metric::Acc => accuracy(scores, labels, 0.5),
            Metric::Auc => auc(scores, labels),
            Metric::Ks => ks(scores, labels),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "acc" => Ok(Metric::Acc),
            "auc" => Ok(Metric::Auc),
            "ks" => Ok(Metric::Ks),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

/// ROC curve points, `(fpr, tpr)`, from `(0,0)` to `(1,1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
            .sum()
    }
}

fn check_lengths(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::Argument("metrics need at least one sample".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::Argument(format!("label {bad} is not 0 or 1")));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Argument(format!("score {s} is not a number")));
    }
    Ok(())
}

fn class_counts(labels: &[u8]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    (pos, labels.len() - pos)
}

fn check_two_classes(labels: &[u8]) -> Result<(usize, usize)> {
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "need both classes, got {pos} positives and {neg} negatives"
        )));
    }
    Ok((pos, neg))
}

/// Fraction of samples where `score >= threshold` agrees with the label.
pub fn accuracy(scores: &[f64], labels: &[u8], threshold: f64) -> Result<f64> {
    check_lengths(scores, labels)?;
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| (s >= threshold) == (y == 1))
        .count();
    Ok(hits as f64 / scores.len() as f64)
}

/// Tie groups in descending score order: `(positives, negatives)` per group.
fn descending_groups(scores: &[f64], labels: &[u8]) -> Vec<(u64, u64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut groups: Vec<(u64, u64)> = Vec::new();
    let mut last = f64::NAN;
    for i in order {
        if groups.is_empty() || scores[i] != last {
            groups.push((0, 0));
            last = scores[i];
        }
        let g = groups.last_mut().expect("pushed above");
        if labels[i] == 1 {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// Mann-Whitney AUC: concordant positive/negative pairs plus half the ties,
/// over all pairs.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (pos, neg) = check_two_classes(labels)?;
    // twice the Mann-Whitney U, kept integral
    let mut twice_u: u128 = 0;
    let mut neg_below = neg as u128;
    for (p, q) in descending_groups(scores, labels) {
        let (p, q) = (p as u128, q as u128);
        neg_below -= q;
        twice_u += 2 * p * neg_below + p * q;
    }
    Ok(twice_u as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Maximum `|TPR(t) − FPR(t)|` over the distinct score thresholds.
pub fn ks(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (pos, neg) = check_two_classes(labels)?;
    let (mut tp, mut fp) = (0i128, 0i128);
    let mut best = 0i128;
    for (p, q) in descending_groups(scores, labels) {
        tp += p as i128;
        fp += q as i128;
        best = best.max((tp * neg as i128 - fp * pos as i128).abs());
    }
    Ok(best as f64 / (pos as f64 * neg as f64))
}

/// ROC curve with one point per distinct threshold, tied scores forming a
/// single step.
pub fn roc_points(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    check_lengths(scores, labels)?;
    let (pos, neg) = check_two_classes(labels)?;
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (p, q) in descending_groups(scores, labels) {
        tp += p;
        fp += q;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
    }
    Ok(RocCurve { points })
}

/// Accuracy at 0.5, AUC and KS in one pass over the inputs.
pub fn evaluate(scores: &[f64], labels: &[u8]) -> Result<MetricsRecord> {
    let (n_pos, n_neg) = class_counts(labels);
    Ok(MetricsRecord {
        acc: accuracy(scores, labels, 0.5)?,
        auc: auc(scores, labels)?,
        ks: ks(scores, labels)?,
        n_pos,
        n_neg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SCORES: [f64; 4] = [0.1, 0.4, 0.35, 0.8];
    const LABELS: [u8; 4] = [0, 0, 1, 1];

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0.9, 0.2], &[1, 0], 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.9, 0.2], &[0, 1], 0.5).unwrap(), 0.0);
        assert_eq!(accuracy(&[0.6, 0.6, 0.4], &[1, 0, 0], 0.5).unwrap(), 2.0 / 3.0);
        assert!(matches!(accuracy(&[], &[], 0.5), Err(Error::Argument(_))));
    }

    #[test]
    fn accuracy_boundary_counts_as_positive() {
        assert_eq!(accuracy(&[0.5], &[1], 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.2, 0.7, 0.1], &[1, 0, 0], 0.0).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 5], &[0, 1, 0, 1, 1]).unwrap(), 0.5);
        assert_eq!(auc(&SCORES, &LABELS).unwrap(), 0.75);
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(ks(&[0.3; 4], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert_eq!(ks(&SCORES, &LABELS).unwrap(), 0.5);
        assert!(matches!(ks(&[0.1], &[0]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn roc_examples() {
        let r = roc_points(&[0.9, 0.1], &[1, 0]).unwrap();
        assert_eq!(r.points, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        let r = roc_points(&[0.5; 3], &[1, 0, 1]).unwrap();
        assert_eq!(r.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        // thresholds 0.8, 0.4, 0.35, 0.1
        let r = roc_points(&SCORES, &LABELS).unwrap();
        assert_eq!(
            r.points,
            vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]
        );
        assert_eq!(r.area(), 0.75);
    }

    fn scores_and_labels() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (2usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..6, n).prop_map(|v| v.into_iter().map(f64::from).collect()),
                prop::collection::vec(0u8..2, n),
            )
        })
    }

    proptest! {
        #[test]
        fn roc_area_matches_auc((scores, labels) in scores_and_labels()) {
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let r = roc_points(&scores, &labels).unwrap();
            prop_assert!((r.area() - auc(&scores, &labels).unwrap()).abs() < 1e-12);
            for w in r.points.windows(2) {
                prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
        }

        #[test]
        fn label_swap_duality((scores, labels) in scores_and_labels()) {
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let flipped: Vec<u8> = labels.iter().map(|y| 1 - y).collect();
            let a = auc(&scores, &labels).unwrap();
            let b = auc(&scores, &flipped).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
            prop_assert_eq!(ks(&scores, &labels).unwrap(), ks(&scores, &flipped).unwrap());
        }

        #[test]
        fn monotone_transforms_preserve_auc_and_ks((scores, labels) in scores_and_labels()) {
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
            let affine: Vec<f64> = scores.iter().map(|s| 3.0 * s - 7.0).collect();
            let a = auc(&scores, &labels).unwrap();
            let k = ks(&scores, &labels).unwrap();
            prop_assert_eq!(auc(&exp, &labels).unwrap(), a);
            prop_assert_eq!(auc(&affine, &labels).unwrap(), a);
            prop_assert_eq!(ks(&exp, &labels).unwrap(), k);
            prop_assert_eq!(ks(&affine, &labels).unwrap(), k);
        }
    }
}
