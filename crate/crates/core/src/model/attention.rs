//! Scaled dot-product attention and the encoder block built around it.

use super::config::AttnConfig;
use crate::error::{Error, Result};
use crate::tensor::{
    elementwise, elementwise_backward, layer_norm, layer_norm_backward, matmul, matmul_a_bt,
    matmul_at_b, softmax_rows, softmax_rows_backward, Activation, ActivationCache, LayerNormCache,
    ParamStore, Tensor,
};

#[derive(Debug, Clone)]
pub struct AttentionCache {
    q: Tensor,
    k: Tensor,
    v: Tensor,
    weights: Tensor,
    scale: f64,
}

impl AttentionCache {
    /// Row-stochastic attention weights `softmax(QKᵀ/√d_k)`.
    pub fn weights(&self) -> &Tensor {
        &self.weights
    }
}

/// `softmax(QKᵀ / √d_k) V` for `Q, K: [s, d_k]`, `V: [s, d_v]`.
pub fn attention(q: &Tensor, k: &Tensor, v: &Tensor) -> Result<(Tensor, AttentionCache)> {
    let (s, dk) = q.dims2()?;
    let (sk, dk2) = k.dims2()?;
    let (sv, _) = v.dims2()?;
    if dk != dk2 || s != sk || sk != sv {
        return Err(Error::Dimension(format!(
            "attention needs Q, K of equal shape and V with matching rows; got {:?}, {:?}, {:?}",
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }
    let scale = 1.0 / (dk as f64).sqrt();
    let mut logits = matmul_a_bt(q, k)?;
    logits.scale(scale);
    let weights = softmax_rows(&logits)?;
    let out = matmul(&weights, v)?;
    Ok((
        out,
        AttentionCache {
            q: q.clone(),
            k: k.clone(),
            v: v.clone(),
            weights,
            scale,
        },
    ))
}

/// Returns `(∂Q, ∂K, ∂V)`.
pub fn attention_backward(cache: &AttentionCache, g: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let gv = matmul_at_b(&cache.weights, g)?;
    let gw = matmul_a_bt(g, &cache.v)?;
    let mut gs = softmax_rows_backward(&cache.weights, &gw)?;
    gs.scale(cache.scale);
    let gq = matmul(&gs, &cache.k)?;
    let gk = matmul_at_b(&gs, &cache.q)?;
    Ok((gq, gk, gv))
}

/// `x W + b` over rows.
pub(crate) fn linear(x: &Tensor, w: &Tensor, b: Option<&Tensor>) -> Result<Tensor> {
    let mut y = matmul(x, w)?;
    if let Some(b) = b {
        let (m, n) = y.dims2()?;
        let bd = b.data();
        for i in 0..m {
            for (v, bv) in y.row_mut(i).iter_mut().zip(bd) {
                *v += bv;
            }
        }
        debug_assert_eq!(bd.len(), n);
    }
    Ok(y)
}

/// Accumulates `∂W += xᵀ g`, `∂b += Σ_rows g` and returns `∂x = g Wᵀ`.
pub(crate) fn linear_backward(
    store: &mut ParamStore,
    x: &Tensor,
    w_id: usize,
    b_id: Option<usize>,
    g: &Tensor,
) -> Result<Tensor> {
    let gw = matmul_at_b(x, g)?;
    store.grad_mut(w_id).add_assign(&gw);
    if let Some(b_id) = b_id {
        let (m, n) = g.dims2()?;
        let gb = store.grad_mut(b_id).data_mut();
        for i in 0..m {
            for j in 0..n {
                gb[j] += g.get2(i, j);
            }
        }
    }
    matmul_a_bt(g, store.value(w_id))
}

fn take_cols(t: &Tensor, start: usize, width: usize) -> Tensor {
    let (m, _) = t.dims2().expect("matrix");
    let mut out = Vec::with_capacity(m * width);
    for i in 0..m {
        out.extend_from_slice(&t.row(i)[start..start + width]);
    }
    Tensor::new(vec![m, width], out).expect("column slice shape")
}

fn put_cols(dst: &mut Tensor, src: &Tensor, start: usize) {
    let (m, width) = src.dims2().expect("matrix");
    for i in 0..m {
        dst.row_mut(i)[start..start + width].copy_from_slice(src.row(i));
    }
}

/// Parameter indices of one encoder block.
#[derive(Debug, Clone)]
pub struct BlockIds {
    pub wq: usize,
    pub wk: usize,
    pub wv: usize,
    pub wo: usize,
    pub sublayers: Option<SublayerIds>,
}

/// Present when residual + layer-norm wrapping is enabled.
#[derive(Debug, Clone)]
pub struct SublayerIds {
    pub ln1_gain: usize,
    pub ln1_shift: usize,
    pub ffn_w1: usize,
    pub ffn_b1: usize,
    pub ffn_w2: usize,
    pub ffn_b2: usize,
    pub ln2_gain: usize,
    pub ln2_shift: usize,
}

#[derive(Debug, Clone)]
struct MhaCache {
    input: Tensor,
    heads: Vec<AttentionCache>,
    concat: Tensor,
}

#[derive(Debug, Clone)]
pub struct BlockCache {
    mha: MhaCache,
    sub: Option<SublayerCache>,
}

#[derive(Debug, Clone)]
struct SublayerCache {
    ln1: LayerNormCache,
    ln2: LayerNormCache,
    ffn_in: Tensor,
    act: ActivationCache,
}

impl BlockCache {
    pub fn heads(&self) -> &[AttentionCache] {
        &self.mha.heads
    }
}

/// Multi-head self-attention `Concat(head_1..head_h) W^o` where
/// `head_i = Attention(H W_i^Q, H W_i^K, H W_i^V)`; the per-head projections
/// are the column blocks of `W^Q`, `W^K`, `W^V`.
fn mha_forward(store: &ParamStore, ids: &BlockIds, cfg: &AttnConfig, h: &Tensor) -> Result<(Tensor, MhaCache)> {
    let dk = cfg.d_k();
    let q = matmul(h, store.value(ids.wq))?;
    let k = matmul(h, store.value(ids.wk))?;
    let v = matmul(h, store.value(ids.wv))?;
    let mut concat = Tensor::zeros(h.shape());
    let mut heads = Vec::with_capacity(cfg.n_heads);
    for head in 0..cfg.n_heads {
        let start = head * dk;
        let (o, cache) = attention(
            &take_cols(&q, start, dk),
            &take_cols(&k, start, dk),
            &take_cols(&v, start, dk),
        )?;
        put_cols(&mut concat, &o, start);
        heads.push(cache);
    }
    let mixed = matmul(&concat, store.value(ids.wo))?;
    Ok((
        mixed,
        MhaCache {
            input: h.clone(),
            heads,
            concat,
        },
    ))
}

fn mha_backward(store: &mut ParamStore, ids: &BlockIds, cfg: &AttnConfig, cache: &MhaCache, g: &Tensor) -> Result<Tensor> {
    let g_concat = linear_backward(store, &cache.concat, ids.wo, None, g)?;
    let dk = cfg.d_k();
    let mut gq = Tensor::zeros(cache.input.shape());
    let mut gk = Tensor::zeros(cache.input.shape());
    let mut gv = Tensor::zeros(cache.input.shape());
    for (head, hc) in cache.heads.iter().enumerate() {
        let start = head * dk;
        let (q, k, v) = attention_backward(hc, &take_cols(&g_concat, start, dk))?;
        put_cols(&mut gq, &q, start);
        put_cols(&mut gk, &k, start);
        put_cols(&mut gv, &v, start);
    }
    let mut g_in = linear_backward(store, &cache.input, ids.wq, None, &gq)?;
    for (w_id, g) in [(ids.wk, &gk), (ids.wv, &gv)] {
        g_in.add_assign(&linear_backward(store, &cache.input, w_id, None, g)?);
    }
    Ok(g_in)
}

fn ffn_forward(store: &ParamStore, sub: &SublayerIds, activation: Activation, x: &Tensor) -> Result<(Tensor, ActivationCache)> {
    let f1 = linear(x, store.value(sub.ffn_w1), Some(store.value(sub.ffn_b1)))?;
    let (z, act) = elementwise(activation, &f1);
    Ok((linear(&z, store.value(sub.ffn_w2), Some(store.value(sub.ffn_b2)))?, act))
}

fn ffn_backward(store: &mut ParamStore, sub: &SublayerIds, x: &Tensor, act: &ActivationCache, g: &Tensor) -> Result<Tensor> {
    let g_z = linear_backward(store, act.output(), sub.ffn_w2, Some(sub.ffn_b2), g)?;
    let g_f1 = elementwise_backward(act, &g_z)?;
    linear_backward(store, x, sub.ffn_w1, Some(sub.ffn_b1), &g_f1)
}

fn ln_backward(store: &mut ParamStore, gain: usize, shift: usize, cache: &LayerNormCache, g: &Tensor) -> Result<Tensor> {
    let grads = layer_norm_backward(cache, g)?;
    store.grad_mut(gain).add_assign(&grads.gain);
    store.grad_mut(shift).add_assign(&grads.shift);
    Ok(grads.x)
}

/// One encoder block.
///
/// Without sublayers the block is bare multi-head attention. With them it
/// computes `H1 = LN(H + MHA(H))`, `out = LN(H1 + FFN(H1))`, or, when
/// `cfg.norm_first` is set, `H1 = H + MHA(LN(H))`, `out = H1 + FFN(LN(H1))`.
pub fn block_forward(
    store: &ParamStore,
    ids: &BlockIds,
    cfg: &AttnConfig,
    activation: Activation,
    h: &Tensor,
) -> Result<(Tensor, BlockCache)> {
    let (_, d) = h.dims2()?;
    if d != cfg.d_model {
        return Err(Error::Dimension(format!(
            "block expects width {}, got {:?}",
            cfg.d_model,
            h.shape()
        )));
    }
    let Some(sub) = &ids.sublayers else {
        let (mixed, mha) = mha_forward(store, ids, cfg, h)?;
        return Ok((mixed, BlockCache { mha, sub: None }));
    };
    let ln = |x: &Tensor, gain: usize, shift: usize| layer_norm(x, store.value(gain), store.value(shift), cfg.ln_eps);
    if cfg.norm_first {
        let (u, ln1) = ln(h, sub.ln1_gain, sub.ln1_shift)?;
        let (mixed, mha) = mha_forward(store, ids, cfg, &u)?;
        let h1 = h.add(&mixed)?;
        let (w, ln2) = ln(&h1, sub.ln2_gain, sub.ln2_shift)?;
        let (f, act) = ffn_forward(store, sub, activation, &w)?;
        let out = h1.add(&f)?;
        let sub = SublayerCache {
            ln1,
            ln2,
            ffn_in: w,
            act,
        };
        Ok((out, BlockCache { mha, sub: Some(sub) }))
    } else {
        let (mixed, mha) = mha_forward(store, ids, cfg, h)?;
        let (h1, ln1) = ln(&h.add(&mixed)?, sub.ln1_gain, sub.ln1_shift)?;
        let (f, act) = ffn_forward(store, sub, activation, &h1)?;
        let (out, ln2) = ln(&h1.add(&f)?, sub.ln2_gain, sub.ln2_shift)?;
        let sub = SublayerCache {
            ln1,
            ln2,
            ffn_in: h1,
            act,
        };
        Ok((out, BlockCache { mha, sub: Some(sub) }))
    }
}

/// Accumulates parameter gradients and returns the gradient for the block input.
pub fn block_backward(
    store: &mut ParamStore,
    ids: &BlockIds,
    cfg: &AttnConfig,
    cache: &BlockCache,
    g_out: &Tensor,
) -> Result<Tensor> {
    match (&ids.sublayers, &cache.sub) {
        (None, None) => mha_backward(store, ids, cfg, &cache.mha, g_out),
        (Some(sub), Some(sc)) if cfg.norm_first => {
            let g_w = ffn_backward(store, sub, &sc.ffn_in, &sc.act, g_out)?;
            let mut g_h1 = ln_backward(store, sub.ln2_gain, sub.ln2_shift, &sc.ln2, &g_w)?;
            g_h1.add_assign(g_out);
            let g_u = mha_backward(store, ids, cfg, &cache.mha, &g_h1)?;
            let mut g_h = ln_backward(store, sub.ln1_gain, sub.ln1_shift, &sc.ln1, &g_u)?;
            g_h.add_assign(&g_h1);
            Ok(g_h)
        }
        (Some(sub), Some(sc)) => {
            let g_s = ln_backward(store, sub.ln2_gain, sub.ln2_shift, &sc.ln2, g_out)?;
            let mut g_h1 = ffn_backward(store, sub, &sc.ffn_in, &sc.act, &g_s)?;
            g_h1.add_assign(&g_s);
            let g_a = ln_backward(store, sub.ln1_gain, sub.ln1_shift, &sc.ln1, &g_h1)?;
            let mut g_h = mha_backward(store, ids, cfg, &cache.mha, &g_a)?;
            g_h.add_assign(&g_a);
            Ok(g_h)
        }
        _ => Err(Error::State("block cache does not match block layout".into())),
    }
}
