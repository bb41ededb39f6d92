//! Tabular data: loading, cleaning, standardization, splitting and synthetic
//! generation.

mod csv_io;
mod prep;
mod schema;
mod split;
mod synth;

use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, write_csv, LoadOptions};
pub use prep::{
    impute, standardize_apply, standardize_fit, winsorize, ImputeStats, Preprocessor,
    StandardizeStats, WinsorizeStats,
};
pub use schema::{Imputation, SchemaConfig};
pub use split::{split, SplitSpec, Splits};
pub use synth::{synth_generate, Interaction, Motif, SynthPreset, SynthSpec};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Which partition a frame (or a statistic fitted on it) came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Unsplit,
    Train,
    Val,
    Test,
}

impl std::fmt::Display for SplitTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitTag::Unsplit => "unsplit",
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
        })
    }
}

/// Feature matrix, binary labels and bookkeeping about how the values were
/// produced.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    feature_names: Vec<String>,
    x: Tensor,
    y: Vec<u8>,
    /// Row-major flags for cells that were missing in the source.
    missing: Vec<bool>,
    tag: SplitTag,
    standardized: bool,
    stats: Option<StandardizeStats>,
}

impl FeatureFrame {
    /// `x` must be `[n_rows, n_features]` and `y` hold one 0/1 label per row.
    pub fn new(feature_names: Vec<String>, x: Tensor, y: Vec<u8>) -> Result<Self> {
        let missing = vec![false; x.len()];
        Self::with_missing(feature_names, x, y, missing)
    }

    pub(crate) fn with_missing(
        feature_names: Vec<String>,
        x: Tensor,
        y: Vec<u8>,
        missing: Vec<bool>,
    ) -> Result<Self> {
        let (n, f) = x.dims2()?;
        if feature_names.len() != f {
            return Err(Error::Schema(format!(
                "{} feature names for {f} columns",
                feature_names.len()
            )));
        }
        if y.len() != n {
            return Err(Error::Shape(format!("{} labels for {n} rows", y.len())));
        }
        if let Some(bad) = y.iter().find(|&&v| v > 1) {
            return Err(Error::Data(format!("label {bad} is not 0 or 1")));
        }
        debug_assert_eq!(missing.len(), x.len());
        Ok(Self {
            feature_names,
            x,
            y,
            missing,
            tag: SplitTag::Unsplit,
            standardized: false,
            stats: None,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn x(&self) -> &Tensor {
        &self.x
    }

    pub fn labels(&self) -> &[u8] {
        &self.y
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    pub fn tag(&self) -> SplitTag {
        self.tag
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn stats(&self) -> Option<&StandardizeStats> {
        self.stats.as_ref()
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[row * self.n_features() + col]
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    /// Missing cells per feature column.
    pub fn missing_by_column(&self) -> Vec<usize> {
        let f = self.n_features();
        let mut counts = vec![0; f];
        for (i, &m) in self.missing.iter().enumerate() {
            if m {
                counts[i % f] += 1;
            }
        }
        counts
    }

    pub fn positive_count(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.x.get2(i, j)).collect()
    }

    /// A copy with column `j` replaced.
    pub fn with_column(&self, j: usize, values: &[f64]) -> Result<Self> {
        if values.len() != self.n_rows() || j >= self.n_features() {
            return Err(Error::Shape(format!(
                "cannot replace column {j} with {} values",
                values.len()
            )));
        }
        let mut out = self.clone();
        let f = self.n_features();
        for (i, &v) in values.iter().enumerate() {
            out.x.data_mut()[i * f + j] = v;
            out.missing[i * f + j] = false;
        }
        Ok(out)
    }

    /// Rows at `indices` (in the given order), tagged as `tag`.
    pub fn select_rows(&self, indices: &[usize], tag: SplitTag) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Config(format!("{tag} split would receive 0 rows")));
        }
        let f = self.n_features();
        let mut data = Vec::with_capacity(indices.len() * f);
        let mut missing = Vec::with_capacity(indices.len() * f);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            missing.extend_from_slice(&self.missing[i * f..(i + 1) * f]);
            y.push(self.y[i]);
        }
        Ok(Self {
            feature_names: self.feature_names.clone(),
            x: Tensor::new(vec![indices.len(), f], data)?,
            y,
            missing,
            tag,
            standardized: self.standardized,
            stats: self.stats.clone(),
        })
    }

    /// Re-tags the frame. Used when a caller deliberately treats a frame as a
    /// given split (tests, fixtures, single-file evaluation).
    pub fn tagged(mut self, tag: SplitTag) -> Self {
        self.tag = tag;
        self
    }
}

/// Splits `frame`, fits the cleaning chain on the train split alone and
/// applies it to all three splits.
pub fn prepare_splits(
    frame: &FeatureFrame,
    spec: &SplitSpec,
    imputation: Imputation,
    winsor: Option<(f64, f64)>,
) -> Result<(Splits, Preprocessor)> {
    let raw = split(frame, spec)?;
    let prep = Preprocessor::fit(&raw.train, imputation, winsor)?;
    let splits = Splits {
        train: prep.apply(&raw.train)?,
        val: prep.apply(&raw.val)?,
        test: prep.apply(&raw.test)?,
    };
    Ok((splits, prep))
}

