use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Activation;

/// Which stages of the network are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    CnnOnly,
    TransformerOnly,
    Hybrid,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::CnnOnly, Variant::TransformerOnly, Variant::Hybrid];

    pub fn has_cnn(self) -> bool {
        matches!(self, Variant::CnnOnly | Variant::Hybrid)
    }

    pub fn has_transformer(self) -> bool {
        matches!(self, Variant::TransformerOnly | Variant::Hybrid)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::CnnOnly => "cnn_only",
            Variant::TransformerOnly => "transformer_only",
            Variant::Hybrid => "hybrid",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cnn_only" => Ok(Variant::CnnOnly),
            "transformer_only" => Ok(Variant::TransformerOnly),
            "hybrid" => Ok(Variant::Hybrid),
            other => Err(Error::Config(format!("unknown model variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvConfig {
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pool_window: usize,
    pub pool_stride: usize,
    /// Nonlinearity between convolution and pooling; `null` for none.
    pub activation: Option<Activation>,
}

impl Default for ConvConfig {
    fn default() -> Self {
        Self {
            channels: 32,
            kernel: 3,
            stride: 1,
            pool_window: 2,
            pool_stride: 2,
            activation: Some(Activation::Relu),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttnConfig {
    pub n_heads: usize,
    pub d_model: usize,
    pub n_blocks: usize,
    /// Residual connections, layer normalization and the feed-forward
    /// sublayer. Off means each block is bare multi-head attention.
    pub layer_norm: bool,
    pub ln_eps: f64,
    /// Normalize each sublayer's input (`H + f(LN(H))`) instead of its
    /// residual sum (`LN(H + f(H))`).
    pub norm_first: bool,
}

impl Default for AttnConfig {
    fn default() -> Self {
        Self {
            n_heads: 4,
            d_model: 32,
            n_blocks: 2,
            layer_norm: true,
            ln_eps: 1e-5,
            norm_first: false,
        }
    }
}

impl AttnConfig {
    pub fn d_k(&self) -> usize {
        self.d_model / self.n_heads
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub variant: Variant,
    pub d_embed: usize,
    pub conv: ConvConfig,
    pub attn: AttnConfig,
    pub ffn_dim: usize,
    pub mlp_hidden: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Hybrid,
            d_embed: 16,
            conv: ConvConfig::default(),
            attn: AttnConfig::default(),
            ffn_dim: 64,
            mlp_hidden: vec![32],
            activation: Activation::Relu,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn with_variant(&self, variant: Variant) -> Self {
        Self {
            variant,
            ..self.clone()
        }
    }

    /// Sequence lengths after tokenization, convolution and pooling for
    /// `n_features` input columns (the latter two equal the first when the
    /// CNN stage is off).
    pub fn sequence_lengths(&self, n_features: usize) -> Result<(usize, usize, usize)> {
        if !self.variant.has_cnn() {
            return Ok((n_features, n_features, n_features));
        }
        let c = &self.conv;
        if c.kernel > n_features {
            return Err(Error::Config(format!(
                "conv kernel {} is wider than the {n_features}-feature sequence",
                c.kernel
            )));
        }
        let conv_len = (n_features - c.kernel) / c.stride + 1;
        if c.pool_window > conv_len {
            return Err(Error::Config(format!(
                "pool window {} is wider than the conv output length {conv_len}",
                c.pool_window
            )));
        }
        let pool_len = (conv_len - c.pool_window) / c.pool_stride + 1;
        Ok((n_features, conv_len, pool_len))
    }

    /// Width of each token entering the transformer stage (or the MLP, when
    /// the transformer is off).
    pub fn stage_width(&self) -> usize {
        if self.variant.has_cnn() {
            self.conv.channels
        } else {
            self.d_embed
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        let positive = [
            ("d_embed", self.d_embed),
            ("n_features", n_features),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.variant.has_cnn() {
            let c = &self.conv;
            for (name, v) in [
                ("conv.channels", c.channels),
                ("conv.kernel", c.kernel),
                ("conv.stride", c.stride),
                ("conv.pool_window", c.pool_window),
                ("conv.pool_stride", c.pool_stride),
            ] {
                if v == 0 {
                    return Err(Error::Config(format!("{name} must be at least 1")));
                }
            }
        }
        if self.variant.has_transformer() {
            let a = &self.attn;
            for (name, v) in [
                ("attn.n_heads", a.n_heads),
                ("attn.d_model", a.d_model),
                ("attn.n_blocks", a.n_blocks),
            ] {
                if v == 0 {
                    return Err(Error::Config(format!("{name} must be at least 1")));
                }
            }
            if a.d_model % a.n_heads != 0 {
                return Err(Error::Config(format!(
                    "d_model {} is not divisible by {} heads",
                    a.d_model, a.n_heads
                )));
            }
            if a.layer_norm && self.ffn_dim == 0 {
                return Err(Error::Config("ffn_dim must be at least 1".into()));
            }
            if !(a.ln_eps > 0.0) {
                return Err(Error::Config("attn.ln_eps must be positive".into()));
            }
        }
        if self.mlp_hidden.iter().any(|&w| w == 0) {
            return Err(Error::Config("mlp_hidden widths must be at least 1".into()));
        }
        self.sequence_lengths(n_features)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ModelConfig::default();
        cfg.validate(10).unwrap();
        assert_eq!(cfg.sequence_lengths(10).unwrap(), (10, 8, 4));
        assert_eq!(cfg.attn.d_k(), 8);
    }

    #[test]
    fn indivisible_heads_rejected() {
        let mut cfg = ModelConfig::default();
        cfg.attn.n_heads = 3;
        assert!(matches!(cfg.validate(10), Err(Error::Config(_))));
        // irrelevant for a CNN-only model
        cfg.variant = Variant::CnnOnly;
        cfg.validate(10).unwrap();
    }

    #[test]
    fn too_few_features_for_kernel() {
        let cfg = ModelConfig::default();
        assert!(cfg.validate(2).is_err());
        assert!(cfg.with_variant(Variant::TransformerOnly).validate(2).is_ok());
    }

    #[test]
    fn json_uses_snake_case_variants() {
        let cfg: ModelConfig = serde_json::from_str(r#"{"variant": "cnn_only", "conv": {"channels": 4}}"#).unwrap();
        assert_eq!(cfg.variant, Variant::CnnOnly);
        assert_eq!(cfg.conv.channels, 4);
        assert_eq!(cfg.conv.kernel, 3);
        assert!(serde_json::from_str::<ModelConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
