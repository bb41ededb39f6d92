use serde::{Deserialize, Serialize};

use super::{FeatureFrame, Imputation, SplitTag};
use crate::error::{Error, Result};

/// Columns with a standard deviation below this are mapped to zeros.
const MIN_STD: f64 = 1e-12;

fn require_train_fit(fitted_on: SplitTag, what: &str) -> Result<()> {
    if fitted_on != SplitTag::Train {
        return Err(Error::Leakage(format!(
            "{what} statistics were fitted on the {fitted_on} split; only train-fitted statistics may be applied"
        )));
    }
    Ok(())
}

fn check_width(expected: usize, frame: &FeatureFrame, what: &str) -> Result<()> {
    if frame.n_features() != expected {
        return Err(Error::Schema(format!(
            "{what} statistics cover {expected} features, frame has {}",
            frame.n_features()
        )));
    }
    Ok(())
}

fn observed(frame: &FeatureFrame, j: usize) -> Vec<f64> {
    (0..frame.n_rows())
        .filter(|&i| !frame.is_missing(i, j))
        .map(|i| frame.x().get2(i, j))
        .collect()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeStats {
    pub fitted_on: SplitTag,
    pub fill: Vec<f64>,
}

impl ImputeStats {
    pub fn fit(frame: &FeatureFrame, policy: Imputation) -> Result<Self> {
        let mut fill = Vec::with_capacity(frame.n_features());
        for j in 0..frame.n_features() {
            let value = match policy {
                Imputation::Constant(c) => c,
                Imputation::Mean | Imputation::Median => {
                    let vals = observed(frame, j);
                    if vals.is_empty() {
                        return Err(Error::Data(format!(
                            "column {:?} has no observed values to impute from",
                            frame.feature_names()[j]
                        )));
                    }
                    if policy == Imputation::Mean {
                        vals.iter().sum::<f64>() / vals.len() as f64
                    } else {
                        quantile(&sorted(vals), 0.5)
                    }
                }
            };
            fill.push(value);
        }
        Ok(Self {
            fitted_on: frame.tag(),
            fill,
        })
    }
}

/// Replaces every missing cell with the fitted per-column fill value.
pub fn impute(frame: &FeatureFrame, stats: &ImputeStats) -> Result<FeatureFrame> {
    require_train_fit(stats.fitted_on, "imputation")?;
    check_width(stats.fill.len(), frame, "imputation")?;
    let f = frame.n_features();
    let mut out = frame.clone();
    for i in 0..frame.n_rows() {
        for j in 0..f {
            if frame.is_missing(i, j) {
                out.x.data_mut()[i * f + j] = stats.fill[j];
                out.missing[i * f + j] = false;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinsorizeStats {
    pub fitted_on: SplitTag,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl WinsorizeStats {
    /// Per-column clip bounds at quantiles `lo_q` and `hi_q` of observed values.
    pub fn fit(frame: &FeatureFrame, lo_q: f64, hi_q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo_q) || !(0.0..=1.0).contains(&hi_q) || lo_q >= hi_q {
            return Err(Error::Config(format!(
                "winsorization quantiles ({lo_q}, {hi_q}) must satisfy 0 <= lo < hi <= 1"
            )));
        }
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for j in 0..frame.n_features() {
            let vals = sorted(observed(frame, j));
            if vals.is_empty() {
                lower.push(f64::NEG_INFINITY);
                upper.push(f64::INFINITY);
            } else {
                lower.push(quantile(&vals, lo_q));
                upper.push(quantile(&vals, hi_q));
            }
        }
        Ok(Self {
            fitted_on: frame.tag(),
            lower,
            upper,
        })
    }
}

pub fn winsorize(frame: &FeatureFrame, stats: &WinsorizeStats) -> Result<FeatureFrame> {
    require_train_fit(stats.fitted_on, "winsorization")?;
    check_width(stats.lower.len(), frame, "winsorization")?;
    let f = frame.n_features();
    let mut out = frame.clone();
    for (k, v) in out.x.data_mut().iter_mut().enumerate() {
        let j = k % f;
        *v = v.clamp(stats.lower[j], stats.upper[j]);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizeStats {
    pub fitted_on: SplitTag,
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
}

impl StandardizeStats {
    fn apply_value(&self, j: usize, v: f64) -> f64 {
        if self.std[j] < MIN_STD {
            0.0
        } else {
            (v - self.mean[j]) / self.std[j]
        }
    }
}

/// Per-column mean and population standard deviation. The frame must have no
/// missing cells left.
pub fn standardize_fit(frame: &FeatureFrame) -> Result<StandardizeStats> {
    if frame.missing_count() > 0 {
        return Err(Error::Data(format!(
            "{} missing cells remain; impute before standardizing",
            frame.missing_count()
        )));
    }
    let n = frame.n_rows() as f64;
    let mut mean = Vec::with_capacity(frame.n_features());
    let mut std = Vec::with_capacity(frame.n_features());
    for j in 0..frame.n_features() {
        let col = frame.column(j);
        let m = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(StandardizeStats {
        fitted_on: frame.tag(),
        mean,
        std,
    })
}

pub fn standardize_apply(frame: &FeatureFrame, stats: &StandardizeStats) -> Result<FeatureFrame> {
    require_train_fit(stats.fitted_on, "standardization")?;
    check_width(stats.mean.len(), frame, "standardization")?;
    let f = frame.n_features();
    let mut out = frame.clone();
    for (k, v) in out.x.data_mut().iter_mut().enumerate() {
        *v = stats.apply_value(k % f, *v);
    }
    out.standardized = true;
    out.stats = Some(stats.clone());
    Ok(out)
}

/// The full train-fitted cleaning chain: impute, optionally winsorize, then
/// standardize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub feature_names: Vec<String>,
    pub impute: ImputeStats,
    pub winsorize: Option<WinsorizeStats>,
    pub standardize: StandardizeStats,
}

impl Preprocessor {
    pub fn fit(train: &FeatureFrame, policy: Imputation, winsor: Option<(f64, f64)>) -> Result<Self> {
        let impute_stats = ImputeStats::fit(train, policy)?;
        let mut cleaned = impute(train, &impute_stats)?;
        let winsor_stats = match winsor {
            Some((lo, hi)) => {
                let stats = WinsorizeStats::fit(&cleaned, lo, hi)?;
                cleaned = winsorize(&cleaned, &stats)?;
                Some(stats)
            }
            None => None,
        };
        let standardize = standardize_fit(&cleaned)?;
        Ok(Self {
            feature_names: train.feature_names().to_vec(),
            impute: impute_stats,
            winsorize: winsor_stats,
            standardize,
        })
    }

    pub fn apply(&self, frame: &FeatureFrame) -> Result<FeatureFrame> {
        if frame.feature_names() != self.feature_names.as_slice() {
            return Err(Error::Schema(
                "frame columns differ from the columns the preprocessor was fitted on".into(),
            ));
        }
        let mut out = impute(frame, &self.impute)?;
        if let Some(w) = &self.winsorize {
            out = winsorize(&out, w)?;
        }
        standardize_apply(&out, &self.standardize)
    }

    /// Transforms one raw row in place; NaN marks a missing cell.
    pub fn transform_row(&self, row: &mut [f64]) -> Result<()> {
        require_train_fit(self.impute.fitted_on, "imputation")?;
        require_train_fit(self.standardize.fitted_on, "standardization")?;
        if row.len() != self.feature_names.len() {
            return Err(Error::Shape(format!(
                "row has {} values, expected {}",
                row.len(),
                self.feature_names.len()
            )));
        }
        for (j, v) in row.iter_mut().enumerate() {
            if v.is_nan() {
                *v = self.impute.fill[j];
            } else if !v.is_finite() {
                return Err(Error::Data(format!("feature {j} is infinite")));
            }
            if let Some(w) = &self.winsorize {
                *v = v.clamp(w.lower[j], w.upper[j]);
            }
            *v = self.standardize.apply_value(j, *v);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn frame(cols: &[&[Option<f64>]], tag: SplitTag) -> FeatureFrame {
        let n = cols[0].len();
        let f = cols.len();
        let mut data = vec![0.0; n * f];
        let mut missing = vec![false; n * f];
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                match v {
                    Some(v) => data[i * f + j] = *v,
                    None => missing[i * f + j] = true,
                }
            }
        }
        let names = (0..f).map(|j| format!("c{j}")).collect();
        FeatureFrame::with_missing(names, Tensor::new(vec![n, f], data).unwrap(), vec![0; n], missing)
            .unwrap()
            .tagged(tag)
    }

    #[test]
    fn median_fill() {
        let f = frame(&[&[Some(1.0), None, Some(3.0)]], SplitTag::Train);
        let stats = ImputeStats::fit(&f, Imputation::Median).unwrap();
        let out = impute(&f, &stats).unwrap();
        assert_eq!(out.column(0), vec![1.0, 2.0, 3.0]);
        assert_eq!(out.missing_count(), 0);
    }

    #[test]
    fn constant_fill() {
        let f = frame(&[&[Some(1.0), None]], SplitTag::Train);
        let stats = ImputeStats::fit(&f, Imputation::Constant(0.0)).unwrap();
        assert_eq!(impute(&f, &stats).unwrap().column(0), vec![1.0, 0.0]);
    }

    #[test]
    fn all_missing_column_is_data_error() {
        let f = frame(&[&[None, None]], SplitTag::Train);
        assert!(matches!(ImputeStats::fit(&f, Imputation::Median), Err(Error::Data(_))));
        assert!(matches!(ImputeStats::fit(&f, Imputation::Mean), Err(Error::Data(_))));
        assert!(ImputeStats::fit(&f, Imputation::Constant(1.0)).is_ok());
    }

    #[test]
    fn test_split_is_filled_with_train_median() {
        // 10-row fixture split 6/4; train medians by hand: c0 {1,2,4,8,9} -> 4,
        // c1 {10,30,50,70} -> 40
        let train = frame(
            &[
                &[Some(1.0), Some(8.0), None, Some(2.0), Some(9.0), Some(4.0)],
                &[Some(10.0), None, Some(30.0), Some(70.0), None, Some(50.0)],
            ],
            SplitTag::Train,
        );
        let test = frame(
            &[
                &[None, Some(100.0), Some(200.0), None],
                &[Some(-5.0), None, None, Some(5.0)],
            ],
            SplitTag::Test,
        );
        let stats = ImputeStats::fit(&train, Imputation::Median).unwrap();
        assert_eq!(stats.fill, vec![4.0, 40.0]);
        let filled = impute(&test, &stats).unwrap();
        assert_eq!(filled.column(0), vec![4.0, 100.0, 200.0, 4.0]);
        assert_eq!(filled.column(1), vec![-5.0, 40.0, 40.0, 5.0]);
    }

    #[test]
    fn standardize_definition() {
        let f = frame(&[&[Some(2.0), Some(4.0), Some(6.0)], &[Some(5.0); 3]], SplitTag::Train);
        let stats = standardize_fit(&f).unwrap();
        assert_eq!(stats.mean, vec![4.0, 5.0]);
        assert!((stats.std[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let out = standardize_apply(&f, &stats).unwrap();
        let c0 = out.column(0);
        let mean: f64 = c0.iter().sum::<f64>() / 3.0;
        let var: f64 = c0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-9 && (var.sqrt() - 1.0).abs() < 1e-9);
        assert_eq!(out.column(1), vec![0.0; 3]);
        assert!(out.is_standardized());
    }

    #[test]
    fn shifted_test_column_keeps_nonzero_mean() {
        let train = frame(&[&[Some(0.0), Some(2.0)]], SplitTag::Train);
        let test = frame(&[&[Some(10.0), Some(12.0)]], SplitTag::Test);
        let stats = standardize_fit(&train).unwrap();
        // train mean 1, std 1 -> test values 9 and 11
        let out = standardize_apply(&test, &stats).unwrap();
        assert_eq!(out.column(0), vec![9.0, 11.0]);
    }

    #[test]
    fn stats_from_non_train_split_are_refused() {
        let test = frame(&[&[Some(1.0), Some(3.0)]], SplitTag::Test);
        let stats = standardize_fit(&test).unwrap();
        assert!(matches!(standardize_apply(&test, &stats), Err(Error::Leakage(_))));
        let imp = ImputeStats::fit(&test, Imputation::Median).unwrap();
        assert!(matches!(impute(&test, &imp), Err(Error::Leakage(_))));
        let unsplit = test.clone().tagged(SplitTag::Unsplit);
        let stats = standardize_fit(&unsplit).unwrap();
        assert!(matches!(standardize_apply(&test, &stats), Err(Error::Leakage(_))));
    }

    #[test]
    fn width_mismatch_is_schema_error() {
        let a = frame(&[&[Some(1.0), Some(2.0)]], SplitTag::Train);
        let b = frame(&[&[Some(1.0)], &[Some(2.0)]], SplitTag::Test);
        let stats = standardize_fit(&a).unwrap();
        assert!(matches!(standardize_apply(&b, &stats), Err(Error::Schema(_))));
    }

    #[test]
    fn standardize_requires_imputation() {
        let f = frame(&[&[Some(1.0), None]], SplitTag::Train);
        assert!(matches!(standardize_fit(&f), Err(Error::Data(_))));
    }

    #[test]
    fn winsorize_clips_extremes() {
        let vals: Vec<Option<f64>> = (0..=100).map(|v| Some(v as f64)).collect();
        let f = frame(&[&vals], SplitTag::Train);
        let stats = WinsorizeStats::fit(&f, 0.05, 0.95).unwrap();
        assert_eq!((stats.lower[0], stats.upper[0]), (5.0, 95.0));
        let out = winsorize(&f, &stats).unwrap();
        assert_eq!(out.column(0)[0], 5.0);
        assert_eq!(out.column(0)[100], 95.0);
        assert_eq!(out.column(0)[50], 50.0);
    }

    #[test]
    fn transform_row_matches_frame_path() {
        let train = frame(
            &[&[Some(1.0), None, Some(3.0), Some(7.0)], &[Some(2.0), Some(2.5), None, Some(0.0)]],
            SplitTag::Train,
        );
        let pre = Preprocessor::fit(&train, Imputation::Median, None).unwrap();
        let out = pre.apply(&train).unwrap();
        let mut row = [f64::NAN, 2.5];
        pre.transform_row(&mut row).unwrap();
        assert_eq!(row, [out.x().get2(1, 0), out.x().get2(1, 1)]);
    }
}
