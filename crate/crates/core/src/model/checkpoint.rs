//! Flat checkpoint files.
//!
//! Layout: the 8-byte magic `CFTCKPT1`, a little-endian `u64` header length,
//! a UTF-8 JSON header, then every parameter value as little-endian `f64` in
//! header order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnyModel, Classifier, HybridModel, LogisticModel, ModelConfig};
use crate::data::Preprocessor;
use crate::error::{Error, Result};
use crate::tensor::{ParamStore, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CFTCKPT1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Hybrid,
    Logistic,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: Kind,
    n_features: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preprocessor: Option<Preprocessor>,
    params: Vec<Entry>,
}

/// A trained model plus the train-fitted preprocessing needed to score raw rows.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: AnyModel,
    pub preprocessor: Option<Preprocessor>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let (kind, config) = match &self.model {
            AnyModel::Hybrid(m) => (Kind::Hybrid, Some(m.config().clone())),
            AnyModel::Logistic(_) => (Kind::Logistic, None),
        };
        let store = self.model.params();
        let header = Header {
            kind,
            n_features: self.model.n_features(),
            config,
            preprocessor: self.preprocessor.clone(),
            params: store
                .iter()
                .map(|p| Entry {
                    name: p.name.clone(),
                    shape: p.value.shape().to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + json.len() + 8 * store.scalar_count());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for v in store.flat_values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Data(format!("invalid checkpoint: {m}"));
        if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(bad("missing magic"));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = &bytes[16..];
        if len > body.len() {
            return Err(bad("truncated header"));
        }
        let header: Header = serde_json::from_slice(&body[..len])?;
        let payload = &body[len..];
        let total: usize = header.params.iter().map(|e| e.shape.iter().product::<usize>()).sum();
        if payload.len() != 8 * total {
            return Err(bad(&format!(
                "payload holds {} bytes, header describes {total} values",
                payload.len()
            )));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut store = ParamStore::new();
        for e in &header.params {
            let n = e.shape.iter().product();
            let data: Vec<f64> = values.by_ref().take(n).collect();
            store.push(e.name.clone(), Tensor::new(e.shape.clone(), data)?)?;
        }
        let model = match header.kind {
            Kind::Hybrid => {
                let config = header.config.ok_or_else(|| bad("hybrid checkpoint without config"))?;
                AnyModel::Hybrid(HybridModel::from_params(config, header.n_features, store)?)
            }
            Kind::Logistic => AnyModel::Logistic(LogisticModel::from_params(header.n_features, store)?),
        };
        Ok(Self {
            model,
            preprocessor: header.preprocessor,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Probabilities for raw (unstandardized) rows, NaN marking missing cells.
    pub fn predict_raw(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut clean = rows.to_vec();
        if let Some(prep) = &self.preprocessor {
            for r in &mut clean {
                prep.transform_row(r)?;
            }
        }
        self.model.predict(&Tensor::from_rows(&clean)?)
    }
}
