//! The classical prediction head: three linear layers with batch
//! normalization, ReLU and dropout between them.
//!
//! ```text
//! Linear(n_in → h1) → BatchNorm(h1) → ReLU → Dropout(p)
//!   → Linear(h1 → h2) → BatchNorm(h2) → ReLU → Dropout(p)
//!   → Linear(h2 → n_classes)
//! ```
//!
//! All learnable values live in one flat vector so that the optimizer and
//! checkpoints can treat them uniformly.

mod loss;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use loss::{cross_entropy, cross_entropy_with_grad};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub input_dim: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub n_classes: usize,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    #[serde(default = "default_bn_eps")]
    pub bn_eps: f64,
    #[serde(default = "default_bn_momentum")]
    pub bn_momentum: f64,
}

fn default_dropout() -> f64 {
    0.25
}

fn default_bn_eps() -> f64 {
    1e-5
}

fn default_bn_momentum() -> f64 {
    0.1
}

impl HeadConfig {
    pub fn new(input_dim: usize, hidden1: usize, hidden2: usize, n_classes: usize) -> Self {
        Self {
            input_dim,
            hidden1,
            hidden2,
            n_classes,
            dropout: default_dropout(),
            bn_eps: default_bn_eps(),
            bn_momentum: default_bn_momentum(),
        }
    }

    /// `(n·h1 + h1) + 2h1 + (h1·h2 + h2) + 2h2 + (h2·C + C)`.
    pub fn parameter_count(&self) -> usize {
        let (n, h1, h2, c) = (self.input_dim, self.hidden1, self.hidden2, self.n_classes);
        (n * h1 + h1) + 2 * h1 + (h1 * h2 + h2) + 2 * h2 + (h2 * c + c)
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden1 == 0 || self.hidden2 == 0 || self.n_classes == 0 {
            return Err(Error::Config(format!("head dimensions must be positive: {self:?}")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.bn_eps > 0.0) || !(0.0..=1.0).contains(&self.bn_momentum) {
            return Err(Error::Config("invalid batch-norm settings".into()));
        }
        Ok(())
    }
}

/// Offsets of every block inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Layout {
    w1: usize,
    b1: usize,
    g1: usize,
    be1: usize,
    w2: usize,
    b2: usize,
    g2: usize,
    be2: usize,
    w3: usize,
    b3: usize,
    end: usize,
}

impl Layout {
    fn of(c: &HeadConfig) -> Self {
        let (n, h1, h2, k) = (c.input_dim, c.hidden1, c.hidden2, c.n_classes);
        let w1 = 0;
        let b1 = w1 + n * h1;
        let g1 = b1 + h1;
        let be1 = g1 + h1;
        let w2 = be1 + h1;
        let b2 = w2 + h1 * h2;
        let g2 = b2 + h2;
        let be2 = g2 + h2;
        let w3 = be2 + h2;
        let b3 = w3 + h2 * k;
        Self {
            w1,
            b1,
            g1,
            be1,
            w2,
            b2,
            g2,
            be2,
            w3,
            b3,
            end: b3 + k,
        }
    }

    fn label(&self, i: usize) -> String {
        let blocks = [
            (self.w1, "linear1.weight"),
            (self.b1, "linear1.bias"),
            (self.g1, "bn1.gamma"),
            (self.be1, "bn1.beta"),
            (self.w2, "linear2.weight"),
            (self.b2, "linear2.bias"),
            (self.g2, "bn2.gamma"),
            (self.be2, "bn2.beta"),
            (self.w3, "linear3.weight"),
            (self.b3, "linear3.bias"),
        ];
        let (start, name) = blocks.iter().rev().find(|(s, _)| i >= *s).copied().unwrap_or((0, "?"));
        format!("head.{name}[{}]", i - start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadModel {
    config: HeadConfig,
    params: Vec<f64>,
    running_mean1: Vec<f64>,
    running_var1: Vec<f64>,
    running_mean2: Vec<f64>,
    running_var2: Vec<f64>,
}

/// Intermediate values of a train-mode pass, needed for backprop and for
/// updating the running statistics.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: RealMatrix,
    bn1: BnCache,
    mask1: Vec<f64>,
    act1: RealMatrix,
    bn2: BnCache,
    mask2: Vec<f64>,
    act2: RealMatrix,
}

#[derive(Debug, Clone)]
struct BnCache {
    pre: RealMatrix,
    normalized: RealMatrix,
    inv_std: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

fn linear(x: &RealMatrix, w: &[f64], b: &[f64], out: usize) -> RealMatrix {
    let (rows, inp) = (x.rows(), x.cols());
    let mut y = RealMatrix::zeros(rows, out);
    for r in 0..rows {
        let xr = x.row(r);
        let yr = y.row_mut(r);
        yr.copy_from_slice(b);
        for (k, &xv) in xr.iter().enumerate().take(inp) {
            if xv == 0.0 {
                continue;
            }
            for (yv, &wv) in yr.iter_mut().zip(&w[k * out..(k + 1) * out]) {
                *yv += xv * wv;
            }
        }
    }
    y
}

/// Accumulates `dW += xᵀ dy`, `db += Σ dy` and returns `dx = dy Wᵀ`.
fn linear_backward(x: &RealMatrix, w: &[f64], dy: &RealMatrix, dw: &mut [f64], db: &mut [f64]) -> RealMatrix {
    let (rows, inp, out) = (x.rows(), x.cols(), dy.cols());
    let mut dx = RealMatrix::zeros(rows, inp);
    for r in 0..rows {
        let xr = x.row(r);
        let dyr = dy.row(r);
        for (dbv, &g) in db.iter_mut().zip(dyr) {
            *dbv += g;
        }
        let dxr = dx.row_mut(r);
        for k in 0..inp {
            let wk = &w[k * out..(k + 1) * out];
            let dwk = &mut dw[k * out..(k + 1) * out];
            let mut acc = 0.0;
            for j in 0..out {
                dwk[j] += xr[k] * dyr[j];
                acc += dyr[j] * wk[j];
            }
            dxr[k] = acc;
        }
    }
    dx
}

fn batch_norm_train(x: &RealMatrix, gamma: &[f64], beta: &[f64], eps: f64) -> (RealMatrix, BnCache) {
    let (b, f) = (x.rows(), x.cols());
    let mut mean = vec![0.0; f];
    for r in 0..b {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= b as f64);
    let mut var = vec![0.0; f];
    for r in 0..b {
        for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= b as f64);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let mut normalized = RealMatrix::zeros(b, f);
    let mut y = RealMatrix::zeros(b, f);
    for r in 0..b {
        for j in 0..f {
            let xh = (x[(r, j)] - mean[j]) * inv_std[j];
            normalized[(r, j)] = xh;
            y[(r, j)] = gamma[j] * xh + beta[j];
        }
    }
    (
        y,
        BnCache {
            pre: x.clone(),
            normalized,
            inv_std,
            mean,
            var,
        },
    )
}

fn batch_norm_eval(x: &RealMatrix, gamma: &[f64], beta: &[f64], mean: &[f64], var: &[f64], eps: f64) -> RealMatrix {
    let mut y = x.clone();
    for r in 0..y.rows() {
        for (j, v) in y.row_mut(r).iter_mut().enumerate() {
            *v = gamma[j] * (*v - mean[j]) / (var[j] + eps).sqrt() + beta[j];
        }
    }
    y
}

fn batch_norm_backward(cache: &BnCache, gamma: &[f64], dy: &RealMatrix, dgamma: &mut [f64], dbeta: &mut [f64]) -> RealMatrix {
    let (b, f) = (dy.rows(), dy.cols());
    let bf = b as f64;
    let mut sum_dxh = vec![0.0; f];
    let mut sum_dxh_xh = vec![0.0; f];
    for r in 0..b {
        for j in 0..f {
            let g = dy[(r, j)];
            let xh = cache.normalized[(r, j)];
            dgamma[j] += g * xh;
            dbeta[j] += g;
            let dxh = g * gamma[j];
            sum_dxh[j] += dxh;
            sum_dxh_xh[j] += dxh * xh;
        }
    }
    let mut dx = RealMatrix::zeros(b, f);
    for r in 0..b {
        for j in 0..f {
            let dxh = dy[(r, j)] * gamma[j];
            let xh = cache.normalized[(r, j)];
            dx[(r, j)] = cache.inv_std[j] / bf * (bf * dxh - sum_dxh[j] - xh * sum_dxh_xh[j]);
        }
    }
    dx
}

fn relu_dropout<R: Rng + ?Sized>(x: &RealMatrix, p: f64, rng: Option<&mut R>) -> (RealMatrix, Vec<f64>) {
    let mut y = x.clone();
    y.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
    let mask = match rng {
        Some(rng) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            (0..y.as_slice().len())
                .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
                .collect()
        }
        _ => vec![1.0; y.as_slice().len()],
    };
    for (v, m) in y.as_mut_slice().iter_mut().zip(&mask) {
        *v *= m;
    }
    (y, mask)
}

/// Gradient through dropout then ReLU.
fn relu_dropout_backward(pre: &RealMatrix, mask: &[f64], dy: &RealMatrix) -> RealMatrix {
    let mut dx = dy.clone();
    for ((d, &m), &x) in dx.as_mut_slice().iter_mut().zip(mask).zip(pre.as_slice()) {
        *d = if x > 0.0 { *d * m } else { 0.0 };
    }
    dx
}

/// Parameter gradients and the gradient with respect to the input batch.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradients {
    pub params: Vec<f64>,
    pub input: RealMatrix,
}

impl HeadModel {
    /// Linear weights uniform in `±1/√fan_in`, biases zero, `γ = 1`, `β = 0`,
    /// running mean 0 and variance 1.
    pub fn new<R: Rng + ?Sized>(config: HeadConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let lay = Layout::of(&config);
        let mut params = vec![0.0; lay.end];
        let mut fill = |start: usize, len: usize, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut params[start..start + len] {
                *v = rng.gen_range(-bound..=bound);
            }
        };
        let (n, h1, h2, k) = (config.input_dim, config.hidden1, config.hidden2, config.n_classes);
        fill(lay.w1, n * h1, n);
        fill(lay.w2, h1 * h2, h1);
        fill(lay.w3, h2 * k, h2);
        params[lay.g1..lay.g1 + h1].fill(1.0);
        params[lay.g2..lay.g2 + h2].fill(1.0);
        Ok(Self {
            running_mean1: vec![0.0; h1],
            running_var1: vec![1.0; h1],
            running_mean2: vec![0.0; h2],
            running_var2: vec![1.0; h2],
            config,
            params,
        })
    }

    pub fn config(&self) -> &HeadConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn param_label(&self, i: usize) -> String {
        Layout::of(&self.config).label(i)
    }

    /// Running statistics `(mean1, var1, mean2, var2)`.
    pub fn running_stats(&self) -> [&[f64]; 4] {
        [&self.running_mean1, &self.running_var1, &self.running_mean2, &self.running_var2]
    }

    pub fn set_running_stats(&mut self, stats: [Vec<f64>; 4]) -> Result<()> {
        let [m1, v1, m2, v2] = stats;
        let (h1, h2) = (self.config.hidden1, self.config.hidden2);
        if m1.len() != h1 || v1.len() != h1 || m2.len() != h2 || v2.len() != h2 {
            return Err(Error::dim("running statistics do not match the hidden sizes"));
        }
        if v1.iter().chain(&v2).any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput("running variances must be positive".into()));
        }
        (self.running_mean1, self.running_var1, self.running_mean2, self.running_var2) = (m1, v1, m2, v2);
        Ok(())
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::dim(format!(
                "expected {} head parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn check_batch(&self, batch: &RealMatrix, mode: Mode) -> Result<()> {
        if batch.rows() == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        if mode == Mode::Train && batch.rows() == 1 {
            return Err(Error::InvalidInput(
                "batch of size 1 in train mode: batch variance is undefined".into(),
            ));
        }
        if batch.cols() != self.config.input_dim {
            return Err(Error::dim(format!(
                "batch width {} but head expects {}",
                batch.cols(),
                self.config.input_dim
            )));
        }
        Ok(())
    }

    /// Eval-mode logits: running statistics, no dropout.
    pub fn forward_eval(&self, batch: &RealMatrix) -> Result<RealMatrix> {
        self.check_batch(batch, Mode::Eval)?;
        let c = &self.config;
        let l = Layout::of(c);
        let p = &self.params;
        let z1 = linear(batch, &p[l.w1..l.b1], &p[l.b1..l.g1], c.hidden1);
        let n1 = batch_norm_eval(&z1, &p[l.g1..l.be1], &p[l.be1..l.w2], &self.running_mean1, &self.running_var1, c.bn_eps);
        let (a1, _) = relu_dropout::<rand_chacha::ChaCha8Rng>(&n1, 0.0, None);
        let z2 = linear(&a1, &p[l.w2..l.b2], &p[l.b2..l.g2], c.hidden2);
        let n2 = batch_norm_eval(&z2, &p[l.g2..l.be2], &p[l.be2..l.w3], &self.running_mean2, &self.running_var2, c.bn_eps);
        let (a2, _) = relu_dropout::<rand_chacha::ChaCha8Rng>(&n2, 0.0, None);
        Ok(linear(&a2, &p[l.w3..l.b3], &p[l.b3..l.end], c.n_classes))
    }

    /// Train-mode logits using batch statistics and inverted dropout. Does not
    /// touch the running statistics; see [`commit_batch_stats`](Self::commit_batch_stats).
    pub fn forward_train<R: Rng + ?Sized>(&self, batch: &RealMatrix, rng: &mut R) -> Result<(RealMatrix, ForwardCache)> {
        self.check_batch(batch, Mode::Train)?;
        let c = &self.config;
        let l = Layout::of(c);
        let p = &self.params;
        let z1 = linear(batch, &p[l.w1..l.b1], &p[l.b1..l.g1], c.hidden1);
        let (n1, bn1) = batch_norm_train(&z1, &p[l.g1..l.be1], &p[l.be1..l.w2], c.bn_eps);
        let (a1, mask1) = relu_dropout(&n1, c.dropout, Some(&mut *rng));
        let z2 = linear(&a1, &p[l.w2..l.b2], &p[l.b2..l.g2], c.hidden2);
        let (n2, bn2) = batch_norm_train(&z2, &p[l.g2..l.be2], &p[l.be2..l.w3], c.bn_eps);
        let (a2, mask2) = relu_dropout(&n2, c.dropout, Some(&mut *rng));
        let logits = linear(&a2, &p[l.w3..l.b3], &p[l.b3..l.end], c.n_classes);
        // BN caches keep their own output for the ReLU mask.
        let bn1 = BnCache { pre: n1, ..bn1 };
        let bn2 = BnCache { pre: n2, ..bn2 };
        Ok((
            logits,
            ForwardCache {
                input: batch.clone(),
                bn1,
                mask1,
                act1: a1,
                bn2,
                mask2,
                act2: a2,
            },
        ))
    }

    /// Folds a train pass's batch statistics into the running estimates
    /// (momentum-weighted, unbiased variance).
    pub fn commit_batch_stats(&mut self, cache: &ForwardCache) {
        let m = self.config.bn_momentum;
        let b = cache.input.rows() as f64;
        let unbias = b / (b - 1.0);
        let upd = |run: &mut [f64], cur: &[f64], scale: f64| {
            for (r, c) in run.iter_mut().zip(cur) {
                *r = (1.0 - m) * *r + m * c * scale;
            }
        };
        upd(&mut self.running_mean1, &cache.bn1.mean, 1.0);
        upd(&mut self.running_var1, &cache.bn1.var, unbias);
        upd(&mut self.running_mean2, &cache.bn2.mean, 1.0);
        upd(&mut self.running_var2, &cache.bn2.var, unbias);
    }

    /// `head_forward`. Train mode also updates the running statistics.
    pub fn forward<R: Rng + ?Sized>(&mut self, batch: &RealMatrix, mode: Mode, rng: &mut R) -> Result<RealMatrix> {
        match mode {
            Mode::Eval => self.forward_eval(batch),
            Mode::Train => {
                let (logits, cache) = self.forward_train(batch, rng)?;
                self.commit_batch_stats(&cache);
                Ok(logits)
            }
        }
    }

    /// Backpropagates `dlogits` through a cached train pass.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &RealMatrix) -> Result<HeadGradients> {
        let c = &self.config;
        if dlogits.rows() != cache.input.rows() || dlogits.cols() != c.n_classes {
            return Err(Error::dim("logit gradient does not match the cached batch"));
        }
        let l = Layout::of(c);
        let p = &self.params;
        let mut g = vec![0.0; l.end];
        let (gw1, rest) = g.split_at_mut(l.b1);
        let (gb1, rest) = rest.split_at_mut(l.g1 - l.b1);
        let (gg1, rest) = rest.split_at_mut(l.be1 - l.g1);
        let (gbe1, rest) = rest.split_at_mut(l.w2 - l.be1);
        let (gw2, rest) = rest.split_at_mut(l.b2 - l.w2);
        let (gb2, rest) = rest.split_at_mut(l.g2 - l.b2);
        let (gg2, rest) = rest.split_at_mut(l.be2 - l.g2);
        let (gbe2, rest) = rest.split_at_mut(l.w3 - l.be2);
        let (gw3, gb3) = rest.split_at_mut(l.b3 - l.w3);

        let da2 = linear_backward(&cache.act2, &p[l.w3..l.b3], dlogits, gw3, gb3);
        let dn2 = relu_dropout_backward(&cache.bn2.pre, &cache.mask2, &da2);
        let dz2 = batch_norm_backward(&cache.bn2, &p[l.g2..l.be2], &dn2, gg2, gbe2);
        let da1 = linear_backward(&cache.act1, &p[l.w2..l.b2], &dz2, gw2, gb2);
        let dn1 = relu_dropout_backward(&cache.bn1.pre, &cache.mask1, &da1);
        let dz1 = batch_norm_backward(&cache.bn1, &p[l.g1..l.be1], &dn1, gg1, gbe1);
        let dx = linear_backward(&cache.input, &p[l.w1..l.b1], &dz1, gw1, gb1);
        Ok(HeadGradients { params: g, input: dx })
    }
}

/// `head_backward`: train-mode pass, mean cross-entropy and full gradients.
/// Running statistics are left untouched.
pub fn head_backward<R: Rng + ?Sized>(
    model: &HeadModel,
    batch: &RealMatrix,
    labels: &[usize],
    rng: &mut R,
) -> Result<(f64, HeadGradients, ForwardCache)> {
    let (logits, cache) = model.forward_train(batch, rng)?;
    let (loss, dlogits) = cross_entropy_with_grad(&logits, labels)?;
    let grads = model.backward(&cache, &dlogits)?;
    Ok((loss, grads, cache))
}
