#![allow(dead_code)]

use credformer::data::{
    prepare_splits, split, standardize_apply, standardize_fit, synth_generate, FeatureFrame, Imputation, SplitSpec,
    SplitTag, Splits, SynthPreset, SynthSpec,
};
use credformer::metrics::auc;
use credformer::model::ModelConfig;
use credformer::tensor::Tensor;
use credformer::train::TrainConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Narrow widths that train in seconds on one core.
pub fn compact_model(seed: u64) -> ModelConfig {
    let mut m = ModelConfig::default();
    m.d_embed = 8;
    m.conv.channels = 16;
    m.attn.d_model = 16;
    m.ffn_dim = 32;
    m.mlp_hidden = vec![16];
    m.seed = seed;
    m
}

pub fn train_cfg(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        seed,
        epochs,
        ..TrainConfig::default()
    }
}

pub struct SynthSplits {
    pub splits: Splits,
    /// AUC of the true logits on the raw test split.
    pub bayes_test_auc: f64,
}

/// Generates `preset` data, splits it 70/15/15 and standardizes on train.
pub fn synth_splits(preset: SynthPreset, n: usize, n_features: usize, data_seed: u64, split_seed: u64) -> SynthSplits {
    let spec: SynthSpec = preset.spec(n_features);
    let (frame, _) = synth_generate(n, n_features, data_seed, &spec).unwrap();
    let split_spec = SplitSpec {
        seed: split_seed,
        ..SplitSpec::default()
    };
    let raw = split(&frame, &split_spec).unwrap();
    let logits: Vec<f64> = (0..raw.test.n_rows()).map(|i| spec.logit(raw.test.row(i))).collect();
    let bayes_test_auc = auc(&logits, raw.test.labels()).unwrap();
    let (splits, _) = prepare_splits(&frame, &split_spec, Imputation::Median, None).unwrap();
    SynthSplits { splits, bayes_test_auc }
}

/// 64 Gaussian rows with balanced labels drawn independently of the features,
/// so fitting them means memorizing them. Val and test reuse the same rows.
pub fn overfit_splits() -> Splits {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let n = 64;
    let f = 10;
    let data: Vec<f64> = (0..n * f).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    for i in (1..n).rev() {
        labels.swap(i, rng.gen_range(0..=i));
    }
    let names = (0..f).map(|j| format!("f{j}")).collect();
    let raw = FeatureFrame::new(names, Tensor::new(vec![n, f], data).unwrap(), labels)
        .unwrap()
        .tagged(SplitTag::Train);
    let train = standardize_apply(&raw, &standardize_fit(&raw).unwrap()).unwrap();
    Splits {
        val: train.clone().tagged(SplitTag::Val),
        test: train.clone().tagged(SplitTag::Test),
        train,
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
