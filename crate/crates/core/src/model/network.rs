use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::attention::{block_backward, block_forward, linear, linear_backward, BlockCache, BlockIds, SublayerIds};
use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::tensor::{
    conv1d, conv1d_backward, elementwise, elementwise_backward, maxpool1d, maxpool1d_backward,
    sigmoid_scalar, ActivationCache, Conv1dCache, MaxPoolCache, ParamStore, Tensor,
};

/// Parameter indices for every stage, derived from the config.
#[derive(Debug, Clone)]
struct Layout {
    tok_embed: usize,
    tok_bias: usize,
    conv: Option<(usize, usize)>,
    proj: Option<(usize, usize)>,
    blocks: Vec<BlockIds>,
    mlp: Vec<(usize, usize)>,
}

fn xavier(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-bound..bound)).collect())
        .expect("shape product matches")
}

/// Registers every parameter in a fixed order, drawing weights from `rng`
/// (or leaving them at zero when `rng` is `None`).
fn build(config: &ModelConfig, n_features: usize, mut rng: Option<&mut ChaCha8Rng>) -> Result<(ParamStore, Layout)> {
    config.validate(n_features)?;
    let mut store = ParamStore::new();
    let mut weight = |store: &mut ParamStore, name: String, shape: &[usize], fan_in: usize, fan_out: usize| {
        let t = match rng.as_deref_mut() {
            Some(r) => xavier(r, shape, fan_in, fan_out),
            None => Tensor::zeros(shape),
        };
        store.push(name, t)
    };
    let zeros = |store: &mut ParamStore, name: String, shape: &[usize]| store.push(name, Tensor::zeros(shape));
    let ones = |store: &mut ParamStore, name: String, n: usize| store.push(name, Tensor::filled(&[n], 1.0));

    let e = config.d_embed;
    let tok_embed = weight(&mut store, "tokenizer.embedding".into(), &[n_features, e], 1, e)?;
    let tok_bias = zeros(&mut store, "tokenizer.bias".into(), &[n_features, e])?;

    let conv = if config.variant.has_cnn() {
        let c = &config.conv;
        let w = weight(
            &mut store,
            "conv.0.weight".into(),
            &[c.channels, e, c.kernel],
            e * c.kernel,
            c.channels * c.kernel,
        )?;
        let b = zeros(&mut store, "conv.0.bias".into(), &[c.channels])?;
        Some((w, b))
    } else {
        None
    };

    let mut width = config.stage_width();
    let mut proj = None;
    let mut blocks = Vec::new();
    if config.variant.has_transformer() {
        let a = &config.attn;
        let d = a.d_model;
        if width != d {
            let w = weight(&mut store, "transformer.input.weight".into(), &[width, d], width, d)?;
            let b = zeros(&mut store, "transformer.input.bias".into(), &[d])?;
            proj = Some((w, b));
        }
        for i in 0..a.n_blocks {
            let p = format!("transformer.{i}");
            let wq = weight(&mut store, format!("{p}.attn.w_q"), &[d, d], d, d)?;
            let wk = weight(&mut store, format!("{p}.attn.w_k"), &[d, d], d, d)?;
            let wv = weight(&mut store, format!("{p}.attn.w_v"), &[d, d], d, d)?;
            let wo = weight(&mut store, format!("{p}.attn.w_o"), &[d, d], d, d)?;
            let sublayers = if a.layer_norm {
                let f = config.ffn_dim;
                Some(SublayerIds {
                    ln1_gain: ones(&mut store, format!("{p}.ln1.gain"), d)?,
                    ln1_shift: zeros(&mut store, format!("{p}.ln1.shift"), &[d])?,
                    ffn_w1: weight(&mut store, format!("{p}.ffn.0.weight"), &[d, f], d, f)?,
                    ffn_b1: zeros(&mut store, format!("{p}.ffn.0.bias"), &[f])?,
                    ffn_w2: weight(&mut store, format!("{p}.ffn.1.weight"), &[f, d], f, d)?,
                    ffn_b2: zeros(&mut store, format!("{p}.ffn.1.bias"), &[d])?,
                    ln2_gain: ones(&mut store, format!("{p}.ln2.gain"), d)?,
                    ln2_shift: zeros(&mut store, format!("{p}.ln2.shift"), &[d])?,
                })
            } else {
                None
            };
            blocks.push(BlockIds { wq, wk, wv, wo, sublayers });
        }
        width = d;
    }

    let mut mlp = Vec::new();
    let widths: Vec<usize> = config.mlp_hidden.iter().copied().chain([1]).collect();
    for (i, &out) in widths.iter().enumerate() {
        let w = weight(&mut store, format!("mlp.{i}.weight"), &[width, out], width, out)?;
        let b = zeros(&mut store, format!("mlp.{i}.bias"), &[out])?;
        mlp.push((w, b));
        width = out;
    }
    Ok((
        store,
        Layout {
            tok_embed,
            tok_bias,
            conv,
            proj,
            blocks,
            mlp,
        },
    ))
}

/// Glorot-uniform weights, zero biases, unit layer-norm gains; deterministic
/// in `(config, n_features, seed)`.
pub fn init_params(config: &ModelConfig, n_features: usize, seed: u64) -> Result<ParamStore> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(build(config, n_features, Some(&mut rng))?.0)
}

/// Closed-form scalar parameter count for a config.
pub fn parameter_count(config: &ModelConfig, n_features: usize) -> Result<usize> {
    config.validate(n_features)?;
    let e = config.d_embed;
    let mut total = 2 * n_features * e;
    if config.variant.has_cnn() {
        let c = &config.conv;
        total += c.channels * e * c.kernel + c.channels;
    }
    let mut width = config.stage_width();
    if config.variant.has_transformer() {
        let d = config.attn.d_model;
        if width != d {
            total += width * d + d;
        }
        let mut block = 4 * d * d;
        if config.attn.layer_norm {
            block += 4 * d + 2 * d * config.ffn_dim + config.ffn_dim + d;
        }
        total += config.attn.n_blocks * block;
        width = d;
    }
    for &h in config.mlp_hidden.iter().chain([&1]) {
        total += width * h + h;
        width = h;
    }
    Ok(total)
}

#[derive(Debug, Clone)]
struct CnnCache {
    conv: Conv1dCache,
    act: Option<ActivationCache>,
    pool: MaxPoolCache,
}

#[derive(Debug, Clone)]
struct MlpLayerCache {
    input: Tensor,
    act: Option<ActivationCache>,
}

#[derive(Debug, Clone)]
struct SampleCache {
    x: Vec<f64>,
    cnn: Option<CnnCache>,
    proj_input: Option<Tensor>,
    blocks: Vec<BlockCache>,
    seq_len: usize,
    width: usize,
    mlp: Vec<MlpLayerCache>,
    prob: f64,
}

/// Intermediate state of one [`HybridModel::forward`] call.
#[derive(Debug)]
pub struct ForwardTrace {
    samples: Vec<SampleCache>,
    consumed: bool,
}

impl ForwardTrace {
    pub fn probs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.prob).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Feature tokenizer → optional CNN stage → optional transformer stage →
/// mean over tokens → MLP → sigmoid.
#[derive(Debug, Clone)]
pub struct HybridModel {
    config: ModelConfig,
    n_features: usize,
    store: ParamStore,
    layout: Layout,
}

impl HybridModel {
    /// Initializes parameters from `config.seed`.
    pub fn new(config: ModelConfig, n_features: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (store, layout) = build(&config, n_features, Some(&mut rng))?;
        Ok(Self {
            config,
            n_features,
            store,
            layout,
        })
    }

    /// Wraps an existing store; names and shapes must match the config's layout.
    pub fn from_params(config: ModelConfig, n_features: usize, store: ParamStore) -> Result<Self> {
        let (mut template, layout) = build(&config, n_features, None)?;
        template.copy_values_from(&store)?;
        Ok(Self {
            config,
            n_features,
            store: template,
            layout,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// One token per feature: `token_t = x_t · e_t + p_t`.
    pub fn tokenize(&self, x_row: &[f64]) -> Result<Tensor> {
        if x_row.len() != self.n_features {
            return Err(Error::Shape(format!(
                "row has {} features, the tokenizer was built for {}",
                x_row.len(),
                self.n_features
            )));
        }
        let emb = self.store.value(self.layout.tok_embed);
        let mut tokens = self.store.value(self.layout.tok_bias).clone();
        for (t, &x) in x_row.iter().enumerate() {
            for (o, &e) in tokens.row_mut(t).iter_mut().zip(emb.row(t)) {
                *o += x * e;
            }
        }
        Ok(tokens)
    }

    fn check_batch(&self, batch: &Tensor) -> Result<usize> {
        let (b, f) = batch.dims2()?;
        if f != self.n_features {
            return Err(Error::Dimension(format!(
                "batch {:?} has {f} features, model expects {}",
                batch.shape(),
                self.n_features
            )));
        }
        Ok(b)
    }

    fn forward_sample(&self, x: &[f64]) -> Result<SampleCache> {
        let cfg = &self.config;
        let mut h = self.tokenize(x)?;
        let cnn = match self.layout.conv {
            Some((w, b)) => {
                let (y, conv) = conv1d(&h.transpose()?, self.store.value(w), self.store.value(b), cfg.conv.stride)?;
                let (y, act) = match cfg.conv.activation {
                    Some(kind) => {
                        let (y, c) = elementwise(kind, &y);
                        (y, Some(c))
                    }
                    None => (y, None),
                };
                let (y, pool) = maxpool1d(&y, cfg.conv.pool_window, cfg.conv.pool_stride)?;
                h = y.transpose()?;
                Some(CnnCache { conv, act, pool })
            }
            None => None,
        };
        let proj_input = match self.layout.proj {
            Some((w, b)) => {
                let input = h;
                h = linear(&input, self.store.value(w), Some(self.store.value(b)))?;
                Some(input)
            }
            None => None,
        };
        let mut blocks = Vec::with_capacity(self.layout.blocks.len());
        for ids in &self.layout.blocks {
            let (y, cache) = block_forward(&self.store, ids, &cfg.attn, cfg.activation, &h)?;
            h = y;
            blocks.push(cache);
        }
        let (seq_len, width) = h.dims2()?;
        let mut pooled = vec![0.0; width];
        for i in 0..seq_len {
            for (p, v) in pooled.iter_mut().zip(h.row(i)) {
                *p += v;
            }
        }
        pooled.iter_mut().for_each(|p| *p /= seq_len as f64);
        let mut v = Tensor::new(vec![1, width], pooled)?;
        let mut mlp = Vec::with_capacity(self.layout.mlp.len());
        let last = self.layout.mlp.len() - 1;
        for (i, &(w, b)) in self.layout.mlp.iter().enumerate() {
            let z = linear(&v, self.store.value(w), Some(self.store.value(b)))?;
            if i < last {
                let (y, act) = elementwise(cfg.activation, &z);
                mlp.push(MlpLayerCache { input: v, act: Some(act) });
                v = y;
            } else {
                mlp.push(MlpLayerCache { input: v, act: None });
                v = z;
            }
        }
        let logit = v.data()[0];
        if !logit.is_finite() {
            return Err(Error::Numeric(format!("non-finite logit {logit}")));
        }
        Ok(SampleCache {
            x: x.to_vec(),
            cnn,
            proj_input,
            blocks,
            seq_len,
            width,
            mlp,
            prob: sigmoid_scalar(logit),
        })
    }

    /// Default probabilities for each row of `batch: [B, n_features]`.
    pub fn forward(&self, batch: &Tensor) -> Result<(Tensor, ForwardTrace)> {
        let b = self.check_batch(batch)?;
        let samples = (0..b)
            .map(|i| self.forward_sample(batch.row(i)))
            .collect::<Result<Vec<_>>>()?;
        let probs = Tensor::vector(samples.iter().map(|s| s.prob).collect());
        Ok((
            probs,
            ForwardTrace {
                samples,
                consumed: false,
            },
        ))
    }

    /// Probabilities without keeping a trace around.
    pub fn predict(&self, batch: &Tensor) -> Result<Vec<f64>> {
        let b = self.check_batch(batch)?;
        (0..b).map(|i| self.forward_sample(batch.row(i)).map(|s| s.prob)).collect()
    }

    fn backward_sample(&mut self, s: &SampleCache, grad_prob: f64) -> Result<Vec<f64>> {
        let cfg = self.config.clone();
        let layout = self.layout.clone();
        let store = &mut self.store;
        let mut g = Tensor::new(vec![1, 1], vec![grad_prob * s.prob * (1.0 - s.prob)])?;
        for (cache, &(w, b)) in s.mlp.iter().zip(&layout.mlp).rev() {
            if let Some(act) = &cache.act {
                g = elementwise_backward(act, &g)?;
            }
            g = linear_backward(store, &cache.input, w, Some(b), &g)?;
        }
        // mean over tokens
        let scale = 1.0 / s.seq_len as f64;
        let mut gh = Tensor::zeros(&[s.seq_len, s.width]);
        for i in 0..s.seq_len {
            for (o, v) in gh.row_mut(i).iter_mut().zip(g.data()) {
                *o = v * scale;
            }
        }
        for (cache, ids) in s.blocks.iter().zip(&layout.blocks).rev() {
            gh = block_backward(store, ids, &cfg.attn, cache, &gh)?;
        }
        if let (Some((w, b)), Some(input)) = (layout.proj, &s.proj_input) {
            gh = linear_backward(store, input, w, Some(b), &gh)?;
        }
        if let (Some((w, b)), Some(cnn)) = (layout.conv, &s.cnn) {
            let mut gy = maxpool1d_backward(&cnn.pool, &gh.transpose()?)?;
            if let Some(act) = &cnn.act {
                gy = elementwise_backward(act, &gy)?;
            }
            let grads = conv1d_backward(&cnn.conv, &gy)?;
            store.grad_mut(w).add_assign(&grads.w);
            store.grad_mut(b).add_assign(&grads.b);
            gh = grads.x.transpose()?;
        }
        // tokenizer
        let emb = store.value(layout.tok_embed).clone();
        let mut gx = vec![0.0; self.n_features];
        {
            let g_emb = store.grad_mut(layout.tok_embed).data_mut();
            let e = cfg.d_embed;
            for (t, &x) in s.x.iter().enumerate() {
                for k in 0..e {
                    let g = gh.get2(t, k);
                    g_emb[t * e + k] += g * x;
                    gx[t] += g * emb.get2(t, k);
                }
            }
        }
        store.grad_mut(layout.tok_bias).add_assign(&gh);
        Ok(gx)
    }

    /// Accumulates `∂loss/∂θ` into the parameter grads given `∂loss/∂probs`,
    /// and returns `∂loss/∂batch`. A trace can be consumed only once.
    pub fn backward(&mut self, trace: &mut ForwardTrace, grad_probs: &Tensor) -> Result<Tensor> {
        if trace.consumed {
            return Err(Error::State("forward trace was already used by a backward pass".into()));
        }
        if grad_probs.len() != trace.samples.len() {
            return Err(Error::Shape(format!(
                "{} probability gradients for a batch of {}",
                grad_probs.len(),
                trace.samples.len()
            )));
        }
        trace.consumed = true;
        let mut input_grads = Vec::with_capacity(trace.samples.len() * self.n_features);
        for (s, &g) in trace.samples.iter().zip(grad_probs.data()) {
            input_grads.extend(self.backward_sample(s, g)?);
        }
        Tensor::new(vec![trace.samples.len(), self.n_features], input_grads)
    }

    /// Attention weights of every head in every block for a single row.
    pub fn attention_maps(&self, x_row: &[f64]) -> Result<Vec<Vec<Tensor>>> {
        let s = self.forward_sample(x_row)?;
        Ok(s
            .blocks
            .iter()
            .map(|b| b.heads().iter().map(|h| h.weights().clone()).collect())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::Variant;
    use crate::tensor::{gradient_check, Activation, GradCheckOptions};

    fn small(variant: Variant) -> ModelConfig {
        let mut cfg = ModelConfig {
            variant,
            d_embed: 3,
            ffn_dim: 5,
            mlp_hidden: vec![4],
            ..Default::default()
        };
        cfg.conv.channels = 4;
        cfg.attn.d_model = 4;
        cfg.attn.n_heads = 2;
        cfg
    }

    fn batch(rows: usize, f: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::new(vec![rows, f], (0..rows * f).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let cfg = ModelConfig::default();
        let a = init_params(&cfg, 10, 42).unwrap();
        let b = init_params(&cfg, 10, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_params(&cfg, 10, 43).unwrap());
        for p in a.iter().filter(|p| p.name.ends_with("bias") || p.name.ends_with("shift")) {
            assert!(p.value.data().iter().all(|&v| v == 0.0), "{}", p.name);
        }
    }

    #[test]
    fn parameter_count_matches_closed_form() {
        // default hybrid, 10 features, hand count:
        // tokenizer 2*10*16 = 320; conv 32*16*3 + 32 = 1568;
        // per block 4*32*32 + 4*32 + 2*32*64 + 64 + 32 = 4096 + 128 + 4096 + 96 = 8416, two blocks 16832;
        // mlp 32*32 + 32 + 32 + 1 = 1089
        let cfg = ModelConfig::default();
        assert_eq!(parameter_count(&cfg, 10).unwrap(), 320 + 1568 + 16832 + 1089);
        for variant in Variant::ALL {
            for ln in [true, false] {
                let mut cfg = ModelConfig::default().with_variant(variant);
                cfg.attn.layer_norm = ln;
                let store = init_params(&cfg, 10, 0).unwrap();
                assert_eq!(store.scalar_count(), parameter_count(&cfg, 10).unwrap());
            }
        }
    }

    #[test]
    fn cnn_only_has_no_transformer_parameters() {
        let store = init_params(&ModelConfig::default().with_variant(Variant::CnnOnly), 10, 0).unwrap();
        assert!(store.names().all(|n| !n.starts_with("transformer")));
        let store = init_params(&ModelConfig::default().with_variant(Variant::TransformerOnly), 10, 0).unwrap();
        assert!(store.names().all(|n| !n.starts_with("conv")));
        assert!(store.by_name("transformer.input.weight").is_some());
    }

    #[test]
    fn tokenizer_examples() {
        let mut cfg = small(Variant::Hybrid);
        cfg.d_embed = 1;
        let mut m = HybridModel::new(cfg, 5).unwrap();
        let bias = Tensor::new(vec![5, 1], vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        m.params_mut().by_name_mut("tokenizer.bias").unwrap().value = bias.clone();
        assert_eq!(m.tokenize(&[0.0; 5]).unwrap(), bias);

        let p = m.params_mut();
        p.by_name_mut("tokenizer.embedding").unwrap().value.fill(1.0);
        p.by_name_mut("tokenizer.bias").unwrap().value.fill(0.0);
        let x = [0.5, -1.0, 2.0, 3.0, -0.25];
        assert_eq!(m.tokenize(&x).unwrap().into_data(), x.to_vec());
        assert!(matches!(m.tokenize(&[1.0; 4]), Err(Error::Shape(_))));
    }

    #[test]
    fn doubling_a_feature_doubles_only_its_token_offset() {
        let m = HybridModel::new(small(Variant::Hybrid), 5).unwrap();
        let mut x = vec![0.3, -0.7, 1.1, 0.4, -2.0];
        let bias = m.params().by_name("tokenizer.bias").unwrap().value.clone();
        let before = m.tokenize(&x).unwrap();
        x[2] *= 2.0;
        let after = m.tokenize(&x).unwrap();
        for t in 0..5 {
            for k in 0..3 {
                let (b0, a0, p) = (before.get2(t, k), after.get2(t, k), bias.get2(t, k));
                if t == 2 {
                    assert!(((a0 - p) - 2.0 * (b0 - p)).abs() < 1e-15);
                } else {
                    assert_eq!(a0, b0);
                }
            }
        }
    }

    #[test]
    fn probabilities_strictly_inside_unit_interval() {
        for variant in Variant::ALL {
            let m = HybridModel::new(ModelConfig::default().with_variant(variant), 10).unwrap();
            let x = batch(16, 10, 3).map(|v| v * 5.0);
            let probs = m.predict(&x).unwrap();
            assert!(probs.iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }

    #[test]
    fn all_zero_parameters_give_one_half() {
        for variant in Variant::ALL {
            let cfg = ModelConfig::default().with_variant(variant);
            let mut m = HybridModel::new(cfg, 10).unwrap();
            m.params_mut().iter_mut().for_each(|p| p.value.fill(0.0));
            let probs = m.predict(&batch(5, 10, 4)).unwrap();
            assert!(probs.iter().all(|&p| p == 0.5), "{variant}");
        }
    }

    #[test]
    fn batch_of_one_matches_batch_row() {
        let m = HybridModel::new(ModelConfig::default(), 10).unwrap();
        let x = batch(6, 10, 5);
        let all = m.predict(&x).unwrap();
        for i in 0..6 {
            let single = Tensor::new(vec![1, 10], x.row(i).to_vec()).unwrap();
            assert!((m.predict(&single).unwrap()[0] - all[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_grads() {
        let mut m = HybridModel::new(ModelConfig::default(), 10).unwrap();
        let (_, mut trace) = m.forward(&batch(3, 10, 6)).unwrap();
        m.backward(&mut trace, &Tensor::zeros(&[3])).unwrap();
        assert!(m.params().iter().all(|p| p.grad.data().iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn trace_reuse_is_state_error() {
        let mut m = HybridModel::new(small(Variant::Hybrid), 6).unwrap();
        let (_, mut trace) = m.forward(&batch(2, 6, 7)).unwrap();
        m.backward(&mut trace, &Tensor::filled(&[2], 1.0)).unwrap();
        assert!(matches!(
            m.backward(&mut trace, &Tensor::filled(&[2], 1.0)),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn wrong_feature_count_is_dimension_error() {
        let m = HybridModel::new(small(Variant::Hybrid), 6).unwrap();
        assert!(matches!(m.predict(&batch(2, 5, 1)), Err(Error::Dimension(_))));
    }

    /// Sum of `probe ⊙ probs`, so every output gets a distinct upstream weight.
    fn grad_error(cfg: ModelConfig, n_features: usize, seed: u64) -> f64 {
        let x = batch(3, n_features, seed + 10);
        let probe = [0.7, -1.3, 0.4];
        let mut m = HybridModel::new(cfg, n_features).unwrap();
        let layout_cfg = m.config().clone();
        let mut store = m.params().clone();
        gradient_check(
            &mut store,
            |s| {
                let mut model = HybridModel::from_params(layout_cfg.clone(), n_features, s.clone())?;
                let (probs, mut trace) = model.forward(&x)?;
                model.backward(&mut trace, &Tensor::vector(probe.to_vec()))?;
                for (dst, src) in s.iter_mut().zip(model.params().iter()) {
                    dst.grad = src.grad.clone();
                }
                Ok(probs.data().iter().zip(probe).map(|(p, g)| p * g).sum())
            },
            GradCheckOptions {
                seed,
                coords_per_param: 6,
                ..Default::default()
            },
        )
        .map(|e| {
            m.params_mut().zero_grads();
            e
        })
        .unwrap()
    }

    #[test]
    fn gradients_match_finite_differences_per_variant() {
        for variant in Variant::ALL {
            for seed in 0..2 {
                let mut cfg = small(variant);
                cfg.activation = Activation::Tanh;
                cfg.conv.activation = Some(Activation::Tanh);
                cfg.seed = seed;
                let err = grad_error(cfg, 6, seed);
                assert!(err < 1e-4, "{variant} seed {seed}: {err}");
            }
        }
    }

    #[test]
    fn input_gradients_match_finite_differences() {
        let mut cfg = small(Variant::Hybrid);
        cfg.activation = Activation::Tanh;
        cfg.conv.activation = Some(Activation::Sigmoid);
        let mut m = HybridModel::new(cfg, 6).unwrap();
        let x = batch(2, 6, 99);
        let (_, mut trace) = m.forward(&x).unwrap();
        let gx = m.backward(&mut trace, &Tensor::vector(vec![1.0, -0.5])).unwrap();
        let f = |x: &Tensor| {
            let p = m.predict(x).unwrap();
            p[0] - 0.5 * p[1]
        };
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += 1e-5;
            let mut xm = x.clone();
            xm.data_mut()[i] -= 1e-5;
            let fd = (f(&xp) - f(&xm)) / 2e-5;
            let a = gx.data()[i];
            assert!((a - fd).abs() / (a.abs() + fd.abs()).max(1e-8) < 1e-4);
        }
    }
}
