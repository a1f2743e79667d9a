//! Convolutional regressor: stride-2 convolution + ReLU blocks, ReLU dense
//! layers with dropout, and a linear 5-output head.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::NetworkConfig;
use super::linalg::{gemm, Mat};
use crate::error::Result;
use crate::seed::{self, Stream};

pub const OUTPUTS: usize = 5;
const STRIDE: usize = 2;
/// Std of the output head weights relative to He initialization.
const HEAD_INIT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LayerKind {
    Conv {
        in_c: usize,
        out_c: usize,
        kernel: usize,
        in_h: usize,
        in_w: usize,
        out_h: usize,
        out_w: usize,
    },
    Dense {
        n_in: usize,
        n_out: usize,
        relu: bool,
        dropout: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Layer {
    pub kind: LayerKind,
    pub w_off: usize,
    pub w_len: usize,
    pub b_off: usize,
    pub b_len: usize,
}

impl Layer {
    pub(crate) fn fan_in(&self) -> usize {
        match self.kind {
            LayerKind::Conv { in_c, kernel, .. } => in_c * kernel * kernel,
            LayerKind::Dense { n_in, .. } => n_in,
        }
    }

    fn out_len(&self) -> usize {
        match self.kind {
            LayerKind::Conv { out_c, out_h, out_w, .. } => out_c * out_h * out_w,
            LayerKind::Dense { n_out, .. } => n_out,
        }
    }
}

/// Layer layout over one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Architecture {
    pub layers: Vec<Layer>,
    pub n_params: usize,
    pub input_len: usize,
}

impl Architecture {
    pub fn new(cfg: &NetworkConfig) -> Self {
        let mut layers = Vec::new();
        let mut off = 0;
        let mut push = |kind: LayerKind, w_len: usize, b_len: usize, layers: &mut Vec<Layer>| {
            layers.push(Layer {
                kind,
                w_off: off,
                w_len,
                b_off: off + w_len,
                b_len,
            });
            off += w_len + b_len;
        };

        let (mut c, mut h, mut w) = (1, cfg.input_height, cfg.input_width);
        let k = cfg.kernel_size;
        for _ in 0..cfg.n_conv_layers {
            let pad = k / 2;
            let out_h = (h + 2 * pad - k) / STRIDE + 1;
            let out_w = (w + 2 * pad - k) / STRIDE + 1;
            let kind = LayerKind::Conv {
                in_c: c,
                out_c: cfg.n_filters,
                kernel: k,
                in_h: h,
                in_w: w,
                out_h,
                out_w,
            };
            push(kind, cfg.n_filters * c * k * k, cfg.n_filters, &mut layers);
            (c, h, w) = (cfg.n_filters, out_h, out_w);
        }
        let mut n_in = c * h * w;
        for _ in 0..cfg.n_dense_layers {
            let kind = LayerKind::Dense {
                n_in,
                n_out: cfg.n_dense_units,
                relu: true,
                dropout: cfg.dropout > 0.0,
            };
            push(kind, n_in * cfg.n_dense_units, cfg.n_dense_units, &mut layers);
            n_in = cfg.n_dense_units;
        }
        let head = LayerKind::Dense {
            n_in,
            n_out: OUTPUTS,
            relu: false,
            dropout: false,
        };
        push(head, n_in * OUTPUTS, OUTPUTS, &mut layers);
        Self {
            layers,
            n_params: off,
            input_len: cfg.input_width * cfg.input_height,
        }
    }

    /// `true` for entries that are weights (regularized), `false` for biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_params];
        for l in &self.layers {
            mask[l.w_off..l.w_off + l.w_len].iter_mut().for_each(|m| *m = true);
        }
        mask
    }

    /// He-normal weights, zero biases, and a near-zero output head.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = seed::rng(seed, Stream::Init, 0);
        let mut params = vec![0.0; self.n_params];
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut std = (2.0 / l.fan_in() as f64).sqrt();
            if i == last {
                std *= HEAD_INIT_SCALE;
            }
            let normal = Normal::new(0.0, std).expect("finite std");
            for p in &mut params[l.w_off..l.w_off + l.w_len] {
                *p = normal.sample(&mut rng);
            }
        }
        params
    }
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Default)]
pub(crate) struct Trace {
    /// Input to each layer.
    inputs: Vec<Vec<f64>>,
    /// im2col matrix of each convolution layer.
    cols: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers of each dense layer, empty when unused.
    masks: Vec<Vec<f64>>,
}

fn im2col(input: &[f64], kind: &LayerKind) -> Vec<f64> {
    let LayerKind::Conv {
        in_c,
        kernel,
        in_h,
        in_w,
        out_h,
        out_w,
        ..
    } = *kind
    else {
        unreachable!("im2col on a dense layer")
    };
    let pad = (kernel / 2) as isize;
    let p = out_h * out_w;
    let mut cols = vec![0.0; in_c * kernel * kernel * p];
    for ci in 0..in_c {
        let plane = &input[ci * in_h * in_w..(ci + 1) * in_h * in_w];
        for ky in 0..kernel {
            for kx in 0..kernel {
                let row = &mut cols[((ci * kernel + ky) * kernel + kx) * p..][..p];
                for oy in 0..out_h {
                    let iy = (oy * STRIDE + ky) as isize - pad;
                    if iy < 0 || iy >= in_h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * in_w..][..in_w];
                    for ox in 0..out_w {
                        let ix = (ox * STRIDE + kx) as isize - pad;
                        if ix >= 0 && ix < in_w as isize {
                            row[oy * out_w + ox] = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], kind: &LayerKind) -> Vec<f64> {
    let LayerKind::Conv {
        in_c,
        kernel,
        in_h,
        in_w,
        out_h,
        out_w,
        ..
    } = *kind
    else {
        unreachable!("col2im on a dense layer")
    };
    let pad = (kernel / 2) as isize;
    let p = out_h * out_w;
    let mut out = vec![0.0; in_c * in_h * in_w];
    for ci in 0..in_c {
        let plane = &mut out[ci * in_h * in_w..(ci + 1) * in_h * in_w];
        for ky in 0..kernel {
            for kx in 0..kernel {
                let row = &cols[((ci * kernel + ky) * kernel + kx) * p..][..p];
                for oy in 0..out_h {
                    let iy = (oy * STRIDE + ky) as isize - pad;
                    if iy < 0 || iy >= in_h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * in_w..][..in_w];
                    for ox in 0..out_w {
                        let ix = (ox * STRIDE + kx) as isize - pad;
                        if ix >= 0 && ix < in_w as isize {
                            dst[ix as usize] += row[oy * out_w + ox];
                        }
                    }
                }
            }
        }
    }
    out
}

impl Architecture {
    /// Forward pass. With `dropout = Some((rate, rng))` inverted dropout is
    /// applied after hidden dense layers and the trace is kept for training.
    pub fn forward<R: Rng>(&self, params: &[f64], input: &[f64], mut dropout: Option<(f64, &mut R)>) -> (Vec<f64>, Trace) {
        assert_eq!(input.len(), self.input_len, "network input has wrong length");
        let mut trace = Trace::default();
        let mut x = input.to_vec();
        for layer in &self.layers {
            let w = &params[layer.w_off..layer.w_off + layer.w_len];
            let b = &params[layer.b_off..layer.b_off + layer.b_len];
            let mut z = vec![0.0; layer.out_len()];
            let mut mask = Vec::new();
            match layer.kind {
                LayerKind::Conv { out_c, out_h, out_w, .. } => {
                    let cols = im2col(&x, &layer.kind);
                    let p = out_h * out_w;
                    let k = layer.fan_in();
                    gemm(Mat::new(w, out_c, k), Mat::new(&cols, k, p), 0.0, &mut z);
                    for (zc, bias) in z.chunks_mut(p).zip(b) {
                        zc.iter_mut().for_each(|v| *v += bias);
                    }
                    trace.cols.push(cols);
                }
                LayerKind::Dense { n_in, n_out, dropout: drops, .. } => {
                    gemm(Mat::new(w, n_out, n_in), Mat::new(&x, n_in, 1), 0.0, &mut z);
                    z.iter_mut().zip(b).for_each(|(v, bias)| *v += bias);
                    if drops {
                        if let Some((rate, rng)) = dropout.as_mut() {
                            let keep = 1.0 / (1.0 - *rate);
                            mask = (0..n_out)
                                .map(|_| if rng.random::<f64>() < *rate { 0.0 } else { keep })
                                .collect();
                        }
                    }
                    trace.cols.push(Vec::new());
                }
            }
            let relu = !matches!(layer.kind, LayerKind::Dense { relu: false, .. });
            let mut a: Vec<f64> = if relu { z.iter().map(|&v| v.max(0.0)).collect() } else { z.clone() };
            if !mask.is_empty() {
                a.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
            }
            trace.inputs.push(std::mem::replace(&mut x, a));
            trace.pre.push(z);
            trace.masks.push(mask);
        }
        (x, trace)
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`.
    pub fn backward(&self, params: &[f64], trace: &Trace, d_out: &[f64], grads: &mut [f64]) {
        let mut delta = d_out.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let mask = &trace.masks[i];
            if !mask.is_empty() {
                delta.iter_mut().zip(mask).for_each(|(d, m)| *d *= m);
            }
            let relu = !matches!(layer.kind, LayerKind::Dense { relu: false, .. });
            if relu {
                delta
                    .iter_mut()
                    .zip(&trace.pre[i])
                    .for_each(|(d, &z)| if z <= 0.0 { *d = 0.0 });
            }
            let w = &params[layer.w_off..layer.w_off + layer.w_len];
            let (gw, gb) = grads[layer.w_off..layer.b_off + layer.b_len].split_at_mut(layer.w_len);
            let input = &trace.inputs[i];
            match layer.kind {
                LayerKind::Conv { out_c, out_h, out_w, .. } => {
                    let p = out_h * out_w;
                    let k = layer.fan_in();
                    let cols = &trace.cols[i];
                    gemm(Mat::new(&delta, out_c, p), Mat::new(cols, k, p).t(), 1.0, gw);
                    for (g, dc) in gb.iter_mut().zip(delta.chunks(p)) {
                        *g += dc.iter().sum::<f64>();
                    }
                    if i > 0 {
                        let mut dcols = vec![0.0; k * p];
                        gemm(Mat::new(w, out_c, k).t(), Mat::new(&delta, out_c, p), 0.0, &mut dcols);
                        delta = col2im(&dcols, &layer.kind);
                    }
                }
                LayerKind::Dense { n_in, n_out, .. } => {
                    gemm(Mat::new(&delta, n_out, 1), Mat::new(input, 1, n_in), 1.0, gw);
                    gb.iter_mut().zip(&delta).for_each(|(g, d)| *g += d);
                    if i > 0 {
                        let mut dx = vec![0.0; n_in];
                        gemm(Mat::new(w, n_out, n_in).t(), Mat::new(&delta, n_out, 1), 0.0, &mut dx);
                        delta = dx;
                    }
                }
            }
        }
    }
}

/// Mean squared error over the outputs of one sample and its gradient.
pub(crate) fn mse(pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let n = pred.len() as f64;
    let loss = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
    let grad = pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect();
    (loss, grad)
}

/// `l1 · Σ|w| + l2 · Σw²` over the weight entries.
pub(crate) fn penalty(params: &[f64], mask: &[bool], l1: f64, l2: f64) -> f64 {
    params
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(w, _)| l1 * w.abs() + l2 * w * w)
        .sum()
}

pub(crate) fn add_penalty_grad(params: &[f64], mask: &[bool], l1: f64, l2: f64, grads: &mut [f64]) {
    for ((g, w), &m) in grads.iter_mut().zip(params).zip(mask) {
        if m {
            // signum(0) is +1 in Rust; the L1 subgradient at 0 is taken as 0.
            let sign = if *w == 0.0 { 0.0 } else { w.signum() };
            *g += l1 * sign + 2.0 * l2 * w;
        }
    }
}

/// Loss (data MSE + penalty) and its gradient over a batch, with dropout off.
pub(crate) fn batch_loss_and_grad(
    arch: &Architecture,
    params: &[f64],
    mask: &[bool],
    inputs: &[&[f64]],
    targets: &[[f64; OUTPUTS]],
    l1: f64,
    l2: f64,
) -> (f64, Vec<f64>) {
    let mut grads = vec![0.0; arch.n_params];
    let scale = 1.0 / inputs.len() as f64;
    let mut loss = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let (out, trace) = arch.forward::<rand_chacha::ChaCha8Rng>(params, x, None);
        let (l, mut g) = mse(&out, t);
        loss += l * scale;
        g.iter_mut().for_each(|v| *v *= scale);
        arch.backward(params, &trace, &g, &mut grads);
    }
    add_penalty_grad(params, mask, l1, l2, &mut grads);
    (loss + penalty(params, mask, l1, l2), grads)
}

pub(crate) fn validate_arch(cfg: &NetworkConfig) -> Result<Architecture> {
    cfg.validate()?;
    Ok(Architecture::new(cfg))
}
