use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureFrame, SplitTag};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.15,
            test: 0.15,
            seed: 7,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("train", self.train), ("val", self.val), ("test", self.test)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} fraction {v} must lie in (0, 1)")));
            }
        }
        let total = self.train + self.val + self.test;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("split fractions sum to {total}, not 1")));
        }
        Ok(())
    }

    /// `(train, val, test)` counts for `n` items; the test split absorbs rounding.
    fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let train = ((self.train * n as f64).round() as usize).min(n);
        let val = ((self.val * n as f64).round() as usize).min(n - train);
        (train, val, n - train - val)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: FeatureFrame,
    pub val: FeatureFrame,
    pub test: FeatureFrame,
}

/// Seeded partition into train/val/test. In stratified mode each split gets
/// the nearest-integer share of positives. Row order inside every split
/// follows the source order.
pub fn split(frame: &FeatureFrame, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let n = frame.n_rows();
    if n < 10 {
        return Err(Error::Config(format!("need at least 10 rows to split, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    if spec.stratified {
        let (n_train, n_val, _) = spec.sizes(n);
        let mut pos: Vec<usize> = (0..n).filter(|&i| frame.labels()[i] == 1).collect();
        let mut neg: Vec<usize> = (0..n).filter(|&i| frame.labels()[i] == 0).collect();
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let (p_train, p_val, _) = spec.sizes(pos.len());
        let p_train = p_train.min(n_train);
        let p_val = p_val.min(n_val);
        let n_train_neg = (n_train - p_train).min(neg.len());
        let n_val_neg = (n_val - p_val).min(neg.len() - n_train_neg);
        train.extend_from_slice(&pos[..p_train]);
        val.extend_from_slice(&pos[p_train..p_train + p_val]);
        test.extend_from_slice(&pos[p_train + p_val..]);
        train.extend_from_slice(&neg[..n_train_neg]);
        val.extend_from_slice(&neg[n_train_neg..n_train_neg + n_val_neg]);
        test.extend_from_slice(&neg[n_train_neg + n_val_neg..]);
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let (n_train, n_val, _) = spec.sizes(n);
        train.extend_from_slice(&idx[..n_train]);
        val.extend_from_slice(&idx[n_train..n_train + n_val]);
        test.extend_from_slice(&idx[n_train + n_val..]);
    }
    for v in [&mut train, &mut val, &mut test] {
        v.sort_unstable();
    }
    Ok(Splits {
        train: frame.select_rows(&train, SplitTag::Train)?,
        val: frame.select_rows(&val, SplitTag::Val)?,
        test: frame.select_rows(&test, SplitTag::Test)?,
    })
}
