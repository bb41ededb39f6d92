use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

/// `C = A·B` for `A: [m,k]`, `B: [k,n]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2()?;
    let (k2, n) = b.dims2()?;
    if k != k2 {
        return Err(Error::Dimension(format!(
            "matmul of {:?} and {:?}: inner dimensions {k} and {k2} differ",
            a.shape(),
            b.shape()
        )));
    }
    let (ad, bd) = (a.data(), b.data());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for t in 0..k {
            let av = ad[i * k + t];
            if av == 0.0 {
                continue;
            }
            let brow = &bd[t * n..(t + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// `Aᵀ·B` for `A: [k,m]`, `B: [k,n]`, without materializing the transpose.
pub fn matmul_at_b(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (k, m) = a.dims2()?;
    let (k2, n) = b.dims2()?;
    if k != k2 {
        return Err(Error::Dimension(format!(
            "AᵀB of {:?} and {:?}: leading dimensions differ",
            a.shape(),
            b.shape()
        )));
    }
    let (ad, bd) = (a.data(), b.data());
    let mut out = vec![0.0; m * n];
    for t in 0..k {
        let brow = &bd[t * n..(t + 1) * n];
        for i in 0..m {
            let av = ad[t * m + i];
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// `A·Bᵀ` for `A: [m,k]`, `B: [n,k]`.
pub fn matmul_a_bt(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2()?;
    let (n, k2) = b.dims2()?;
    if k != k2 {
        return Err(Error::Dimension(format!(
            "ABᵀ of {:?} and {:?}: trailing dimensions differ",
            a.shape(),
            b.shape()
        )));
    }
    let (ad, bd) = (a.data(), b.data());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &ad[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &bd[j * k..(j + 1) * k];
            out[i * n + j] = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
        }
    }
    Tensor::new(vec![m, n], out)
}

/// Saved state of a [`conv1d`] call.
#[derive(Debug, Clone)]
pub struct Conv1dCache {
    x: Tensor,
    w: Tensor,
    stride: usize,
}

#[derive(Debug, Clone)]
pub struct Conv1dGrads {
    pub x: Tensor,
    pub w: Tensor,
    pub b: Tensor,
}

/// Valid-padding 1-D cross-correlation.
///
/// `x: [c_in, L]`, `w: [c_out, c_in, K]`, `b: [c_out]`; output is
/// `[c_out, (L-K)/stride + 1]` with
/// `out[o,i] = b[o] + Σ_c Σ_t x[c, i·stride + t] · w[o,c,t]`.
pub fn conv1d(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize) -> Result<(Tensor, Conv1dCache)> {
    if stride == 0 {
        return Err(Error::Config("conv1d stride must be at least 1".into()));
    }
    let (c_in, len) = x.dims2()?;
    let &[c_out, wc_in, k] = w.shape() else {
        return Err(Error::Dimension(format!(
            "conv1d kernel must be [c_out, c_in, K], got {:?}",
            w.shape()
        )));
    };
    if wc_in != c_in {
        return Err(Error::Dimension(format!(
            "conv1d input has {c_in} channels, kernel {:?} expects {wc_in}",
            w.shape()
        )));
    }
    if b.shape() != [c_out] {
        return Err(Error::Dimension(format!(
            "conv1d bias {:?} does not match {c_out} output channels",
            b.shape()
        )));
    }
    if k > len {
        return Err(Error::Shape(format!(
            "conv1d kernel width {k} exceeds input length {len}"
        )));
    }
    let l_out = (len - k) / stride + 1;
    let (xd, wd, bd) = (x.data(), w.data(), b.data());
    let mut out = vec![0.0; c_out * l_out];
    for o in 0..c_out {
        let orow = &mut out[o * l_out..(o + 1) * l_out];
        orow.fill(bd[o]);
        for c in 0..c_in {
            let xrow = &xd[c * len..(c + 1) * len];
            let taps = &wd[(o * c_in + c) * k..(o * c_in + c + 1) * k];
            for (t, &w) in taps.iter().enumerate() {
                if stride == 1 {
                    for (acc, &x) in orow.iter_mut().zip(&xrow[t..t + l_out]) {
                        *acc += w * x;
                    }
                } else {
                    for (i, acc) in orow.iter_mut().enumerate() {
                        *acc += w * xrow[i * stride + t];
                    }
                }
            }
        }
    }
    let cache = Conv1dCache {
        x: x.clone(),
        w: w.clone(),
        stride,
    };
    Ok((Tensor::new(vec![c_out, l_out], out)?, cache))
}

pub fn conv1d_backward(cache: &Conv1dCache, g_out: &Tensor) -> Result<Conv1dGrads> {
    let (c_in, len) = cache.x.dims2()?;
    let &[c_out, _, k] = cache.w.shape() else {
        unreachable!("kernel shape validated in forward");
    };
    let stride = cache.stride;
    let l_out = (len - k) / stride + 1;
    if g_out.shape() != [c_out, l_out] {
        return Err(Error::Dimension(format!(
            "conv1d upstream gradient {:?} does not match output [{c_out}, {l_out}]",
            g_out.shape()
        )));
    }
    let (xd, wd, gd) = (cache.x.data(), cache.w.data(), g_out.data());
    let mut gx = vec![0.0; c_in * len];
    let mut gw = vec![0.0; c_out * c_in * k];
    let mut gb = vec![0.0; c_out];
    for o in 0..c_out {
        let grow = &gd[o * l_out..(o + 1) * l_out];
        gb[o] = grow.iter().sum();
        for c in 0..c_in {
            let base = (o * c_in + c) * k;
            let xrow = &xd[c * len..(c + 1) * len];
            let gxrow = &mut gx[c * len..(c + 1) * len];
            for t in 0..k {
                let w = wd[base + t];
                let mut acc = 0.0;
                for (i, &g) in grow.iter().enumerate() {
                    let j = i * stride + t;
                    acc += g * xrow[j];
                    gxrow[j] += g * w;
                }
                gw[base + t] += acc;
            }
        }
    }
    Ok(Conv1dGrads {
        x: Tensor::new(vec![c_in, len], gx)?,
        w: Tensor::new(vec![c_out, c_in, k], gw)?,
        b: Tensor::new(vec![c_out], gb)?,
    })
}

#[derive(Debug, Clone)]
pub struct MaxPoolCache {
    in_shape: [usize; 2],
    argmax: Vec<usize>,
}

/// Per-channel max over sliding windows. Ties resolve to the lowest index.
pub fn maxpool1d(x: &Tensor, window: usize, stride: usize) -> Result<(Tensor, MaxPoolCache)> {
    if window == 0 || stride == 0 {
        return Err(Error::Config("pool window and stride must be at least 1".into()));
    }
    let (c, len) = x.dims2()?;
    if window > len {
        return Err(Error::Shape(format!(
            "pool window {window} exceeds input length {len}"
        )));
    }
    let l_out = (len - window) / stride + 1;
    let xd = x.data();
    let mut out = Vec::with_capacity(c * l_out);
    let mut argmax = Vec::with_capacity(c * l_out);
    for ch in 0..c {
        let row = &xd[ch * len..(ch + 1) * len];
        for i in 0..l_out {
            let start = i * stride;
            let mut best = start;
            for j in start + 1..start + window {
                if row[j] > row[best] {
                    best = j;
                }
            }
            out.push(row[best]);
            argmax.push(ch * len + best);
        }
    }
    Ok((
        Tensor::new(vec![c, l_out], out)?,
        MaxPoolCache {
            in_shape: [c, len],
            argmax,
        },
    ))
}

pub fn maxpool1d_backward(cache: &MaxPoolCache, g_out: &Tensor) -> Result<Tensor> {
    if g_out.len() != cache.argmax.len() {
        return Err(Error::Dimension(format!(
            "maxpool upstream gradient {:?} does not match {} outputs",
            g_out.shape(),
            cache.argmax.len()
        )));
    }
    let mut gx = vec![0.0; cache.in_shape[0] * cache.in_shape[1]];
    for (&src, &g) in cache.argmax.iter().zip(g_out.data()) {
        gx[src] += g;
    }
    Tensor::new(cache.in_shape.to_vec(), gx)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: &Tensor) -> Result<Tensor> {
    let (m, n) = x.dims2()?;
    let mut out = x.clone();
    for i in 0..m {
        let row = &mut out.data_mut()[i * n..(i + 1) * n];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Ok(out)
}

/// Gradient of [`softmax_rows`] given its output `y` and upstream `g`.
pub fn softmax_rows_backward(y: &Tensor, g: &Tensor) -> Result<Tensor> {
    let (m, n) = y.dims2()?;
    if g.shape() != y.shape() {
        return Err(Error::Dimension(format!(
            "softmax gradient {:?} does not match {:?}",
            g.shape(),
            y.shape()
        )));
    }
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let yr = y.row(i);
        let gr = g.row(i);
        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for j in 0..n {
            out[i * n + j] = yr[j] * (gr[j] - dot);
        }
    }
    Tensor::new(vec![m, n], out)
}

/// Pointwise nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid_scalar(z),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation kind {other:?}"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        })
    }
}

pub fn sigmoid_scalar(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
pub struct ActivationCache {
    kind: Activation,
    output: Tensor,
}

impl ActivationCache {
    pub fn output(&self) -> &Tensor {
        &self.output
    }
}

pub fn elementwise(kind: Activation, x: &Tensor) -> (Tensor, ActivationCache) {
    let y = x.map(|v| kind.apply(v));
    let cache = ActivationCache {
        kind,
        output: y.clone(),
    };
    (y, cache)
}

pub fn elementwise_backward(cache: &ActivationCache, g: &Tensor) -> Result<Tensor> {
    if g.shape() != cache.output.shape() {
        return Err(Error::Dimension(format!(
            "{} gradient {:?} does not match {:?}",
            cache.kind,
            g.shape(),
            cache.output.shape()
        )));
    }
    let mut out = g.clone();
    for (o, &y) in out.data_mut().iter_mut().zip(cache.output.data()) {
        *o *= cache.kind.derivative_from_output(y);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    normalized: Tensor,
    inv_std: Vec<f64>,
    gain: Tensor,
}

#[derive(Debug, Clone)]
pub struct LayerNormGrads {
    pub x: Tensor,
    pub gain: Tensor,
    pub shift: Tensor,
}

/// Per-row normalization to zero mean and unit (population) variance,
/// followed by `gain ⊙ x̂ + shift`.
pub fn layer_norm(
    x: &Tensor,
    gain: &Tensor,
    shift: &Tensor,
    eps: f64,
) -> Result<(Tensor, LayerNormCache)> {
    let (m, n) = x.dims2()?;
    if gain.shape() != [n] || shift.shape() != [n] {
        return Err(Error::Dimension(format!(
            "layer_norm over width {n} got gain {:?} and shift {:?}",
            gain.shape(),
            shift.shape()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Config(format!("layer_norm eps must be positive, got {eps}")));
    }
    let mut normalized = x.clone();
    let mut out = x.clone();
    let mut inv_std = Vec::with_capacity(m);
    for i in 0..m {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / n as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let is = 1.0 / (var + eps).sqrt();
        inv_std.push(is);
        let nrow = normalized.row_mut(i);
        for (nv, &v) in nrow.iter_mut().zip(row) {
            *nv = (v - mean) * is;
        }
        let orow = out.row_mut(i);
        for j in 0..n {
            orow[j] = gain.data()[j] * normalized.get2(i, j) + shift.data()[j];
        }
    }
    Ok((
        out,
        LayerNormCache {
            normalized,
            inv_std,
            gain: gain.clone(),
        },
    ))
}

pub fn layer_norm_backward(cache: &LayerNormCache, g: &Tensor) -> Result<LayerNormGrads> {
    let (m, n) = cache.normalized.dims2()?;
    if g.shape() != [m, n] {
        return Err(Error::Dimension(format!(
            "layer_norm gradient {:?} does not match [{m}, {n}]",
            g.shape()
        )));
    }
    let gain = cache.gain.data();
    let mut gx = vec![0.0; m * n];
    let mut ggain = vec![0.0; n];
    let mut gshift = vec![0.0; n];
    let mut dxhat = vec![0.0; n];
    for i in 0..m {
        let grow = g.row(i);
        let xhat = cache.normalized.row(i);
        for j in 0..n {
            ggain[j] += grow[j] * xhat[j];
            gshift[j] += grow[j];
            dxhat[j] = grow[j] * gain[j];
        }
        let sum_d: f64 = dxhat.iter().sum();
        let sum_dx: f64 = dxhat.iter().zip(xhat).map(|(a, b)| a * b).sum();
        let scale = cache.inv_std[i] / n as f64;
        for j in 0..n {
            gx[i * n + j] = scale * (n as f64 * dxhat[j] - sum_d - xhat[j] * sum_dx);
        }
    }
    Ok(LayerNormGrads {
        x: Tensor::new(vec![m, n], gx)?,
        gain: Tensor::new(vec![n], ggain)?,
        shift: Tensor::new(vec![n], gshift)?,
    })
}
