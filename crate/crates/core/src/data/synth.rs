use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::FeatureFrame;
use crate::error::{Error, Result};
use crate::tensor::{sigmoid_scalar, Tensor};

/// `strength · x_i · x_j`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

/// `strength · (|x_s + … + x_{s+w-1}| / √w − √(2/π))`: a centred nonlinear
/// function of a contiguous window of features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Motif {
    pub start: usize,
    pub width: usize,
    pub strength: f64,
}

/// Generative logit: `bias + w·x + Σ interactions + motif`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Linear weights; missing trailing entries are zero.
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
    #[serde(default)]
    pub motif: Option<Motif>,
}

/// Named generators used by tests, the acceptance suite and `synth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthPreset {
    /// No signal at all.
    Noise,
    /// A single feature with weight 5.
    StrongSingle,
    /// Three linear features with large weights.
    Linear,
    /// Product of the first two features only.
    Xor,
    /// Product of the first and last feature only.
    LongRange,
    /// A local three-feature motif plus a first/last product.
    LocalGlobal,
}

impl std::str::FromStr for SynthPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::Config(format!("unknown synthetic preset {s:?}")))
    }
}

impl SynthPreset {
    pub fn spec(self, n_features: usize) -> SynthSpec {
        let last = n_features.saturating_sub(1);
        match self {
            SynthPreset::Noise => SynthSpec::default(),
            SynthPreset::StrongSingle => SynthSpec {
                weights: vec![5.0],
                ..Default::default()
            },
            SynthPreset::Linear => SynthSpec {
                weights: vec![6.0, -4.0, 3.0],
                ..Default::default()
            },
            SynthPreset::Xor => SynthSpec {
                interactions: vec![Interaction {
                    i: 0,
                    j: 1,
                    strength: 6.0,
                }],
                ..Default::default()
            },
            SynthPreset::LongRange => SynthSpec {
                interactions: vec![Interaction {
                    i: 0,
                    j: last,
                    strength: 4.0,
                }],
                ..Default::default()
            },
            SynthPreset::LocalGlobal => SynthSpec {
                interactions: vec![Interaction {
                    i: 0,
                    j: last,
                    strength: 3.0,
                }],
                motif: Some(Motif {
                    start: n_features / 2 - 1,
                    width: 3,
                    strength: 4.0,
                }),
                ..Default::default()
            },
        }
    }
}

impl SynthSpec {
    fn validate(&self, n_features: usize) -> Result<()> {
        if self.weights.len() > n_features {
            return Err(Error::Config(format!(
                "{} weights for {n_features} features",
                self.weights.len()
            )));
        }
        for it in &self.interactions {
            if it.i >= n_features || it.j >= n_features {
                return Err(Error::Config(format!(
                    "interaction ({}, {}) outside {n_features} features",
                    it.i, it.j
                )));
            }
        }
        if let Some(m) = self.motif {
            if m.width == 0 || m.start + m.width > n_features {
                return Err(Error::Config(format!(
                    "motif window {}..{} outside {n_features} features",
                    m.start,
                    m.start + m.width
                )));
            }
        }
        Ok(())
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut z = self.bias;
        z += self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        for it in &self.interactions {
            z += it.strength * x[it.i] * x[it.j];
        }
        if let Some(m) = self.motif {
            let s: f64 = x[m.start..m.start + m.width].iter().sum();
            let centre = (2.0 / std::f64::consts::PI).sqrt();
            z += m.strength * (s.abs() / (m.width as f64).sqrt() - centre);
        }
        z
    }
}

/// Draws `x ~ N(0, I)` and `y ~ Bernoulli(sigmoid(logit(x)))`. Returns the
/// frame and the true logits, which are the Bayes-optimal scores.
pub fn synth_generate(n: usize, n_features: usize, seed: u64, spec: &SynthSpec) -> Result<(FeatureFrame, Vec<f64>)> {
    if n < 100 {
        return Err(Error::Config(format!("synthetic data needs n >= 100, got {n}")));
    }
    if n_features == 0 {
        return Err(Error::Config("synthetic data needs at least one feature".into()));
    }
    spec.validate(n_features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * n_features);
    let mut labels = Vec::with_capacity(n);
    let mut logits = Vec::with_capacity(n);
    for _ in 0..n {
        let start = data.len();
        for _ in 0..n_features {
            data.push(rng.sample::<f64, _>(StandardNormal));
        }
        let z = spec.logit(&data[start..]);
        let u: f64 = rng.gen();
        labels.push(u8::from(u < sigmoid_scalar(z)));
        logits.push(z);
    }
    let names = (0..n_features).map(|j| format!("f{j}")).collect();
    let frame = FeatureFrame::new(names, Tensor::new(vec![n, n_features], data)?, labels)?;
    Ok((frame, logits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::auc;

    #[test]
    fn noise_has_no_bayes_signal() {
        let (frame, logits) = synth_generate(4000, 6, 1, &SynthPreset::Noise.spec(6)).unwrap();
        assert!(logits.iter().all(|&z| z == 0.0));
        let rate = frame.positive_count() as f64 / 4000.0;
        assert!((rate - 0.5).abs() < 0.03);
        // every score ties, so the AUC is exactly one half
        assert_eq!(auc(&logits, frame.labels()).unwrap(), 0.5);
    }

    #[test]
    fn strong_single_feature_is_separable() {
        let (frame, logits) = synth_generate(10_000, 8, 2, &SynthPreset::StrongSingle.spec(8)).unwrap();
        assert!(auc(&logits, frame.labels()).unwrap() > 0.9);
    }

    #[test]
    fn seeded_generation_is_bit_identical() {
        let spec = SynthPreset::LocalGlobal.spec(10);
        let a = synth_generate(300, 10, 9, &spec).unwrap();
        let b = synth_generate(300, 10, 9, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn motif_is_centred() {
        let spec = SynthSpec {
            motif: Some(Motif {
                start: 0,
                width: 3,
                strength: 1.0,
            }),
            ..Default::default()
        };
        let (_, logits) = synth_generate(20_000, 3, 4, &spec).unwrap();
        let mean = logits.iter().sum::<f64>() / logits.len() as f64;
        assert!(mean.abs() < 0.02, "{mean}");
    }

    #[test]
    fn rejects_out_of_range_terms() {
        let spec = SynthPreset::LongRange.spec(10);
        assert!(matches!(synth_generate(200, 5, 0, &spec), Err(Error::Config(_))));
        assert!(synth_generate(50, 5, 0, &SynthSpec::default()).is_err());
    }

    #[test]
    fn preset_names_parse() {
        assert_eq!("strong-single".parse::<SynthPreset>().unwrap(), SynthPreset::StrongSingle);
        assert!("nope".parse::<SynthPreset>().is_err());
    }
}
