//! Small convolutional classifier over 40x44 MFCC matrices.
//!
//! Four blocks of conv(3x3, same) -> ReLU -> max-pool(2x2, floor) -> dropout,
//! then dense -> ReLU -> dropout -> dense -> softmax. Activations are laid
//! out channel-major across the batch (`[C][B][H][W]`) so every convolution
//! is a single GEMM over the im2col matrix of the whole batch.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gesture::{GestureClass, NUM_CLASSES};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchMeta {
    /// Height (coefficients), width (frames), channels.
    pub input_shape: [usize; 3],
    pub conv_channels: Vec<usize>,
    pub kernel: usize,
    pub pool: usize,
    pub dense_units: usize,
    pub n_classes: usize,
    pub conv_dropout: f64,
    pub dense_dropout: f64,
}

impl Default for ArchMeta {
    fn default() -> Self {
        Self {
            input_shape: [40, 44, 1],
            conv_channels: vec![8, 16, 32, 32],
            kernel: 3,
            pool: 2,
            dense_units: 64,
            n_classes: NUM_CLASSES,
            conv_dropout: 0.25,
            dense_dropout: 0.5,
        }
    }
}

impl ArchMeta {
    /// `(height, width)` entering each conv block, then the final pooled size.
    pub fn spatial_chain(&self) -> Vec<(usize, usize)> {
        let mut hw = (self.input_shape[0], self.input_shape[1]);
        let mut out = vec![hw];
        for _ in &self.conv_channels {
            hw = (hw.0 / self.pool, hw.1 / self.pool);
            out.push(hw);
        }
        out
    }

    pub fn flatten_len(&self) -> usize {
        let (h, w) = *self.spatial_chain().last().expect("non-empty chain");
        h * w * self.conv_channels.last().copied().unwrap_or(self.input_shape[2])
    }

    pub fn input_len(&self) -> usize {
        self.input_shape[0] * self.input_shape[1] * self.input_shape[2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel != 3 || self.pool != 2 {
            return Err(Error::ShapeMismatch("only 3x3 kernels with 2x2 pooling are supported".into()));
        }
        if self.n_classes != NUM_CLASSES {
            return Err(Error::ShapeMismatch(format!("expected {NUM_CLASSES} classes, got {}", self.n_classes)));
        }
        if self.conv_channels.is_empty() || self.conv_channels.contains(&0) || self.dense_units == 0 {
            return Err(Error::ShapeMismatch("empty layer".into()));
        }
        if self.flatten_len() == 0 {
            return Err(Error::ShapeMismatch("input too small for the pooling chain".into()));
        }
        for p in [self.conv_dropout, self.dense_dropout] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::ShapeMismatch(format!("dropout rate {p} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub in_ch: usize,
    pub out_ch: usize,
    /// `[out][in][ky][kx]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// `[out][in]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Every trainable tensor. Gradients and optimiser moments reuse this type.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub conv: Vec<ConvLayer>,
    pub dense1: DenseLayer,
    pub dense2: DenseLayer,
}

impl Params {
    pub fn zeros(arch: &ArchMeta) -> Self {
        let mut in_ch = arch.input_shape[2];
        let conv = arch
            .conv_channels
            .iter()
            .map(|&out_ch| {
                let layer =
                    ConvLayer { in_ch, out_ch, weights: vec![0.0; out_ch * in_ch * 9], bias: vec![0.0; out_ch] };
                in_ch = out_ch;
                layer
            })
            .collect();
        let dense = |inputs: usize, outputs: usize| DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        };
        Self {
            conv,
            dense1: dense(arch.flatten_len(), arch.dense_units),
            dense2: dense(arch.dense_units, arch.n_classes),
        }
    }

    /// He-uniform weights (limit sqrt(6 / fan_in)), zero biases.
    pub fn he_uniform(arch: &ArchMeta, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(arch);
        for layer in &mut p.conv {
            let limit = (6.0 / (layer.in_ch * 9) as f64).sqrt();
            layer.weights.iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
        }
        for layer in [&mut p.dense1, &mut p.dense2] {
            let limit = (6.0 / layer.inputs as f64).sqrt();
            layer.weights.iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
        }
        p
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for c in &self.conv {
            v.push(&c.weights);
            v.push(&c.bias);
        }
        for d in [&self.dense1, &self.dense2] {
            v.push(&d.weights);
            v.push(&d.bias);
        }
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for c in &mut self.conv {
            v.push(&mut c.weights);
            v.push(&mut c.bias);
        }
        for d in [&mut self.dense1, &mut self.dense2] {
            v.push(&mut d.weights);
            v.push(&mut d.bias);
        }
        v
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs_diff(&self, other: &Params) -> f64 {
        self.tensors()
            .iter()
            .zip(other.tensors())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GesturePrediction {
    pub probs: [f64; NUM_CLASSES],
    pub class: GestureClass,
    pub max_prob: f64,
}

impl GesturePrediction {
    pub fn from_probs(probs: [f64; NUM_CLASSES]) -> Self {
        let (idx, &max_prob) =
            probs
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |best, (i, p)| if *p > *best.1 { (i, p) } else { best });
        Self { probs, class: GestureClass::from_index(idx).expect("class index"), max_prob }
    }
}

/// Per-block intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
struct ConvCache {
    h: usize,
    w: usize,
    /// im2col of the block input, `[in*9][B*h*w]`.
    cols: Vec<f64>,
    /// Post-ReLU activations `[out][B][h][w]`.
    act: Vec<f64>,
    /// Flat index into `act` of each pooled maximum.
    pool_idx: Vec<u32>,
    drop_mask: Option<Vec<f64>>,
}

/// Output of a forward pass plus whatever backprop needs.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub batch: usize,
    /// Row-major `[B][n_classes]`.
    pub probs: Vec<f64>,
    /// Row-major `[B][n_classes]`.
    pub logits: Vec<f64>,
    convs: Vec<ConvCache>,
    /// Block inputs: `stage_inputs[l]` feeds conv block `l`; the last entry
    /// is the flattened dense input `[B][F]`.
    stage_inputs: Vec<Vec<f64>>,
    /// Post-ReLU hidden layer `[B][U]`.
    hidden: Vec<f64>,
    hidden_mask: Option<Vec<f64>>,
    /// Hidden layer after dropout, the input of the output layer.
    hidden_out: Vec<f64>,
}

impl ForwardPass {
    pub fn predictions(&self) -> Vec<GesturePrediction> {
        self.probs
            .chunks(NUM_CLASSES)
            .map(|p| GesturePrediction::from_probs(p.try_into().expect("5 classes")))
            .collect()
    }

    /// Input of block `stage` (`0..=n_conv`; the last stage is the dense input).
    pub fn stage_input(&self, stage: usize) -> &[f64] {
        &self.stage_inputs[stage]
    }

    /// True when both passes pick the same pool maxima and take the same ReLU
    /// branch at every value that reaches the output, in every block they
    /// share (blocks are aligned from the output end). Between two such
    /// parameter settings the loss is smooth.
    pub fn same_activation_pattern(&self, other: &ForwardPass) -> bool {
        let hidden_same = self.hidden.len() == other.hidden.len()
            && self.hidden.iter().zip(&other.hidden).all(|(x, y)| (*x > 0.0) == (*y > 0.0));
        hidden_same
            && self.convs.iter().rev().zip(other.convs.iter().rev()).all(|(a, b)| {
                a.pool_idx == b.pool_idx
                    && a.pool_idx.iter().all(|&i| (a.act[i as usize] > 0.0) == (b.act[i as usize] > 0.0))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub arch: ArchMeta,
    pub params: Params,
    pub seed: u64,
}

impl CnnModel {
    pub fn new(seed: u64) -> Self {
        Self::with_arch(ArchMeta::default(), seed).expect("default architecture is valid")
    }

    pub fn with_arch(arch: ArchMeta, seed: u64) -> Result<Self> {
        arch.validate()?;
        let params = Params::he_uniform(&arch, &mut crate::rngutil::rng(seed));
        Ok(Self { arch, params, seed })
    }

    pub fn zeros(arch: ArchMeta) -> Result<Self> {
        arch.validate()?;
        Ok(Self { params: Params::zeros(&arch), arch, seed: 0 })
    }

    pub fn num_params(&self) -> usize {
        self.params.count()
    }

    fn check_inputs(&self, inputs: &[f64]) -> Result<usize> {
        let len = self.arch.input_len();
        if inputs.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if !inputs.len().is_multiple_of(len) {
            return Err(Error::ShapeMismatch(format!("input length {} is not a multiple of {len}", inputs.len())));
        }
        Ok(inputs.len() / len)
    }

    /// Forward pass over `[B][H][W]` inputs. Passing an RNG enables dropout.
    pub fn forward(&self, inputs: &[f64], dropout: Option<&mut ChaCha8Rng>) -> Result<ForwardPass> {
        let batch = self.check_inputs(inputs)?;
        Ok(self.forward_from(0, inputs, batch, dropout))
    }

    /// Runs the network starting at `stage` with that stage's input.
    pub fn forward_from(
        &self,
        stage: usize,
        input: &[f64],
        batch: usize,
        mut dropout: Option<&mut ChaCha8Rng>,
    ) -> ForwardPass {
        let chain = self.arch.spatial_chain();
        let n_conv = self.params.conv.len();
        let mut stage_inputs = vec![Vec::new(); n_conv + 1];
        let mut convs = Vec::with_capacity(n_conv);
        let mut x = input.to_vec();

        for (l, layer) in self.params.conv.iter().enumerate().skip(stage.min(n_conv)) {
            let (h, w) = chain[l];
            stage_inputs[l] = x;
            let cols = im2col(&stage_inputs[l], layer.in_ch, batch, h, w);
            let n = batch * h * w;
            let mut act = vec![0.0; layer.out_ch * n];
            for (o, row) in act.chunks_mut(n).enumerate() {
                row.fill(layer.bias[o]);
            }
            gemm(
                layer.out_ch,
                layer.in_ch * 9,
                n,
                &layer.weights,
                (layer.in_ch * 9, 1),
                &cols,
                (n, 1),
                &mut act,
                (n, 1),
                1.0,
            );
            act.iter_mut().for_each(|v| *v = v.max(0.0));
            let (mut pooled, pool_idx) = max_pool(&act, layer.out_ch, batch, h, w);
            let drop_mask = dropout.as_deref_mut().map(|rng| dropout_mask(pooled.len(), self.arch.conv_dropout, rng));
            if let Some(mask) = &drop_mask {
                pooled.iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
            }
            convs.push(ConvCache { h, w, cols, act, pool_idx, drop_mask });
            x = pooled;
        }

        let flat = if stage >= n_conv {
            x
        } else {
            let (ph, pw) = chain[n_conv];
            flatten(&x, self.params.conv[n_conv - 1].out_ch, batch, ph * pw)
        };
        stage_inputs[n_conv] = flat;

        let (d1, d2) = (&self.params.dense1, &self.params.dense2);
        let mut hidden = dense_forward(&stage_inputs[n_conv], batch, d1);
        hidden.iter_mut().for_each(|v| *v = v.max(0.0));
        let hidden_mask = dropout.map(|rng| dropout_mask(hidden.len(), self.arch.dense_dropout, rng));
        let hidden_out = match &hidden_mask {
            Some(mask) => hidden.iter().zip(mask).map(|(v, m)| v * m).collect(),
            None => hidden.clone(),
        };
        let logits = dense_forward(&hidden_out, batch, d2);
        let probs = logits.chunks(d2.outputs).flat_map(softmax).collect();

        // Stages skipped by `forward_from` keep empty caches; backprop only
        // runs on full passes.
        ForwardPass { batch, probs, logits, convs, stage_inputs, hidden, hidden_mask, hidden_out }
    }

    pub fn predict_batch(&self, inputs: &[f64]) -> Result<Vec<GesturePrediction>> {
        Ok(self.forward(inputs, None)?.predictions())
    }

    pub fn predict(&self, input: &[f64]) -> Result<GesturePrediction> {
        if input.len() != self.arch.input_len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} inputs, got {}",
                self.arch.input_len(),
                input.len()
            )));
        }
        Ok(self.predict_batch(input)?.remove(0))
    }

    /// Mean categorical cross-entropy, no dropout.
    pub fn loss(&self, inputs: &[f64], labels: &[usize]) -> Result<f64> {
        let pass = self.forward(inputs, None)?;
        cross_entropy(&pass, labels)
    }

    /// Loss and parameter gradients for a batch of class-index labels.
    pub fn loss_and_gradients(
        &self,
        inputs: &[f64],
        labels: &[usize],
        dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, Params)> {
        let pass = self.forward(inputs, dropout)?;
        let loss = cross_entropy(&pass, labels)?;
        Ok((loss, self.backward(&pass, labels)))
    }

    /// Reverse pass for a full forward pass (started at stage 0).
    pub fn backward(&self, pass: &ForwardPass, labels: &[usize]) -> Params {
        let b = pass.batch;
        let k = self.arch.n_classes;
        let mut grads = Params::zeros(&self.arch);
        let (d1, d2) = (&self.params.dense1, &self.params.dense2);

        // softmax + cross-entropy
        let mut dlogits = pass.probs.clone();
        for (i, &y) in labels.iter().enumerate() {
            dlogits[i * k + y] -= 1.0;
        }
        let inv_b = 1.0 / b as f64;
        dlogits.iter_mut().for_each(|v| *v *= inv_b);

        let mut dhidden = dense_backward(&dlogits, &pass.hidden_out, b, d2, &mut grads.dense2);
        if let Some(mask) = &pass.hidden_mask {
            dhidden.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
        }
        dhidden.iter_mut().zip(&pass.hidden).for_each(|(g, h)| {
            if *h <= 0.0 {
                *g = 0.0;
            }
        });
        let n_conv = self.params.conv.len();
        let dflat = dense_backward(&dhidden, &pass.stage_inputs[n_conv], b, d1, &mut grads.dense1);

        let chain = self.arch.spatial_chain();
        let (ph, pw) = chain[n_conv];
        let mut dpooled = unflatten(&dflat, self.params.conv[n_conv - 1].out_ch, b, ph * pw);

        for l in (0..n_conv).rev() {
            let layer = &self.params.conv[l];
            let cache = &pass.convs[l];
            if let Some(mask) = &cache.drop_mask {
                dpooled.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
            }
            let mut dact = vec![0.0; cache.act.len()];
            for (g, &idx) in dpooled.iter().zip(&cache.pool_idx) {
                dact[idx as usize] += g;
            }
            dact.iter_mut().zip(&cache.act).for_each(|(g, a)| {
                if *a <= 0.0 {
                    *g = 0.0;
                }
            });
            let n = b * cache.h * cache.w;
            let kk = layer.in_ch * 9;
            let gl = &mut grads.conv[l];
            for (o, row) in dact.chunks(n).enumerate() {
                gl.bias[o] = row.iter().sum();
            }
            // dW = dact · colsᵀ
            gemm(layer.out_ch, n, kk, &dact, (n, 1), &cache.cols, (1, n), &mut gl.weights, (kk, 1), 0.0);
            if l > 0 {
                let mut dcols = vec![0.0; kk * n];
                // dcols = Wᵀ · dact
                gemm(kk, layer.out_ch, n, &layer.weights, (1, kk), &dact, (n, 1), &mut dcols, (n, 1), 0.0);
                dpooled = col2im(&dcols, layer.in_ch, b, cache.h, cache.w);
            }
        }
        grads
    }
}

/// Mean negative log-likelihood of the labels under `pass.probs`.
pub fn cross_entropy(pass: &ForwardPass, labels: &[usize]) -> Result<f64> {
    let k = pass.probs.len() / pass.batch;
    if labels.len() != pass.batch {
        return Err(Error::ShapeMismatch(format!("{} labels for batch of {}", labels.len(), pass.batch)));
    }
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::ShapeMismatch(format!("label {y} out of range")));
        }
        let z = &pass.logits[i * k..(i + 1) * k];
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - z[y];
    }
    let loss = total / labels.len() as f64;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok(loss)
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn dropout_mask(len: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    (0..len).map(|_| if rng.random::<f64>() < keep { scale } else { 0.0 }).collect()
}

/// `C = A·B + beta·C` with explicit (row, column) strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (usize, usize),
    b: &[f64],
    b_strides: (usize, usize),
    c: &mut [f64],
    c_strides: (usize, usize),
    beta: f64,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(a.len() > (m - 1) * a_strides.0 + (k.max(1) - 1) * a_strides.1 || k == 0);
    assert!(b.len() > (k.max(1) - 1) * b_strides.0 + (n - 1) * b_strides.1 || k == 0);
    assert!(c.len() > (m - 1) * c_strides.0 + (n - 1) * c_strides.1);
    // SAFETY: the asserts above bound every index dgemm touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0 as isize,
            a_strides.1 as isize,
            b.as_ptr(),
            b_strides.0 as isize,
            b_strides.1 as isize,
            beta,
            c.as_mut_ptr(),
            c_strides.0 as isize,
            c_strides.1 as isize,
        );
    }
}

fn im2col(x: &[f64], channels: usize, batch: usize, h: usize, w: usize) -> Vec<f64> {
    let plane = h * w;
    let n = batch * plane;
    let mut cols = vec![0.0; channels * 9 * n];
    for c in 0..channels {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[((c * 9) + ky * 3 + kx) * n..][..n];
                for b in 0..batch {
                    let src = &x[(c * batch + b) * plane..][..plane];
                    let dst = &mut row[b * plane..][..plane];
                    for y in 0..h {
                        let sy = y as isize + ky as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let srow = &src[sy as usize * w..][..w];
                        let drow = &mut dst[y * w..][..w];
                        match kx {
                            0 => drow[1..].copy_from_slice(&srow[..w - 1]),
                            1 => drow.copy_from_slice(srow),
                            _ => drow[..w - 1].copy_from_slice(&srow[1..]),
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], channels: usize, batch: usize, h: usize, w: usize) -> Vec<f64> {
    let plane = h * w;
    let n = batch * plane;
    let mut x = vec![0.0; channels * n];
    for c in 0..channels {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[((c * 9) + ky * 3 + kx) * n..][..n];
                for b in 0..batch {
                    let src = &row[b * plane..][..plane];
                    let dst = &mut x[(c * batch + b) * plane..][..plane];
                    for y in 0..h {
                        let sy = y as isize + ky as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let grow = &src[y * w..][..w];
                        let xrow = &mut dst[sy as usize * w..][..w];
                        match kx {
                            0 => xrow[..w - 1].iter_mut().zip(&grow[1..]).for_each(|(d, s)| *d += s),
                            1 => xrow.iter_mut().zip(grow).for_each(|(d, s)| *d += s),
                            _ => xrow[1..].iter_mut().zip(&grow[..w - 1]).for_each(|(d, s)| *d += s),
                        }
                    }
                }
            }
        }
    }
    x
}

/// 2x2 stride-2 max pooling with floor on odd sizes. Ties go to the first
/// position in row-major order.
fn max_pool(x: &[f64], channels: usize, batch: usize, h: usize, w: usize) -> (Vec<f64>, Vec<u32>) {
    let (ph, pw) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(channels * batch * ph * pw);
    let mut idx = Vec::with_capacity(out.capacity());
    for plane in 0..channels * batch {
        let base = plane * h * w;
        for y in 0..ph {
            for xx in 0..pw {
                let mut best = base + 2 * y * w + 2 * xx;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = base + (2 * y + dy) * w + 2 * xx + dx;
                    if x[i] > x[best] {
                        best = i;
                    }
                }
                out.push(x[best]);
                idx.push(best as u32);
            }
        }
    }
    (out, idx)
}

/// `[C][B][P]` -> `[B][C*P]`
fn flatten(x: &[f64], channels: usize, batch: usize, plane: usize) -> Vec<f64> {
    let f = channels * plane;
    let mut out = vec![0.0; batch * f];
    for c in 0..channels {
        for b in 0..batch {
            out[b * f + c * plane..][..plane].copy_from_slice(&x[(c * batch + b) * plane..][..plane]);
        }
    }
    out
}

fn unflatten(x: &[f64], channels: usize, batch: usize, plane: usize) -> Vec<f64> {
    let f = channels * plane;
    let mut out = vec![0.0; batch * f];
    for c in 0..channels {
        for b in 0..batch {
            out[(c * batch + b) * plane..][..plane].copy_from_slice(&x[b * f + c * plane..][..plane]);
        }
    }
    out
}

/// `[B][in]` -> `[B][out]`
fn dense_forward(x: &[f64], batch: usize, layer: &DenseLayer) -> Vec<f64> {
    let mut y = Vec::with_capacity(batch * layer.outputs);
    for _ in 0..batch {
        y.extend_from_slice(&layer.bias);
    }
    gemm(
        batch,
        layer.inputs,
        layer.outputs,
        x,
        (layer.inputs, 1),
        &layer.weights,
        (1, layer.inputs),
        &mut y,
        (layer.outputs, 1),
        1.0,
    );
    y
}

/// Accumulates weight/bias gradients and returns the input gradient.
fn dense_backward(dy: &[f64], x: &[f64], batch: usize, layer: &DenseLayer, grad: &mut DenseLayer) -> Vec<f64> {
    let (ni, no) = (layer.inputs, layer.outputs);
    for row in dy.chunks(no) {
        grad.bias.iter_mut().zip(row).for_each(|(g, d)| *g += d);
    }
    // dW[out][in] = dyᵀ · x
    gemm(no, batch, ni, dy, (1, no), x, (ni, 1), &mut grad.weights, (ni, 1), 1.0);
    let mut dx = vec![0.0; batch * ni];
    gemm(batch, no, ni, dy, (no, 1), &layer.weights, (ni, 1), &mut dx, (ni, 1), 0.0);
    dx
}
