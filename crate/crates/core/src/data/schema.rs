use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How missing cells are filled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Imputation {
    Median,
    Mean,
    Constant(f64),
}

impl Default for Imputation {
    fn default() -> Self {
        Imputation::Median
    }
}

/// Column contract for a CSV input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    pub label_column: String,
    /// Empty means "every column except the label and unnamed index columns".
    #[serde(default)]
    pub feature_columns: Vec<String>,
    #[serde(default = "default_missing_markers")]
    pub missing_markers: Vec<String>,
    #[serde(default)]
    pub imputation: Imputation,
}

fn default_missing_markers() -> Vec<String> {
    vec![String::new(), "NA".into()]
}

impl Default for SchemaConfig {
    fn default() -> Self {
        Self {
            label_column: "label".into(),
            feature_columns: Vec::new(),
            missing_markers: default_missing_markers(),
            imputation: Imputation::Median,
        }
    }
}

impl SchemaConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Fills an empty feature list from a CSV header and validates the result.
    pub fn resolve(&self, header: &[&str]) -> Result<SchemaConfig> {
        let mut out = self.clone();
        if !header.contains(&self.label_column.as_str()) {
            return Err(Error::Schema(format!(
                "label column {:?} not in header",
                self.label_column
            )));
        }
        if out.feature_columns.is_empty() {
            out.feature_columns = header
                .iter()
                .filter(|h| !h.trim().is_empty() && **h != self.label_column)
                .map(|h| h.to_string())
                .collect();
        }
        for col in &out.feature_columns {
            if !header.contains(&col.as_str()) {
                return Err(Error::Schema(format!("feature column {col:?} not in header")));
            }
        }
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::Schema("no feature columns".into()));
        }
        if self.feature_columns.contains(&self.label_column) {
            return Err(Error::Schema(format!(
                "label column {:?} is also listed as a feature",
                self.label_column
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.feature_columns {
            if !seen.insert(c) {
                return Err(Error::Schema(format!("feature column {c:?} listed twice")));
            }
        }
        Ok(())
    }

    pub fn is_missing(&self, cell: &str) -> bool {
        let cell = cell.trim();
        self.missing_markers.iter().any(|m| m == cell)
    }
}
