//! Small convolutional backbone with a pooled linear head.
//!
//! Stages are `conv3x3 → ReLU`, with a 2×2 max-pool between stages. The
//! output of the last stage is the CAM tap; it is globally average-pooled and
//! fed to a linear classifier, so the classifier rows are exactly the CAM
//! channel weights. Forward and backward passes are hand-written over
//! im2col + sgemm and run sample by sample in a fixed order, which keeps
//! training bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cam::{ClassWeights, FeatureMap};
use crate::error::{PeplError, Result};
use crate::image::Image;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyBackboneConfig {
    pub input_channels: usize,
    pub height: usize,
    pub width: usize,
    /// Output channels of each conv stage; the last one is the CAM tap.
    pub widths: Vec<usize>,
    pub num_classes: usize,
    pub seed: u64,
}

impl Default for ToyBackboneConfig {
    fn default() -> Self {
        Self {
            input_channels: 3,
            height: 32,
            width: 32,
            widths: vec![16, 32, 64],
            num_classes: 10,
            seed: 0,
        }
    }
}

impl ToyBackboneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || self.widths.contains(&0) || self.input_channels == 0 {
            return Err(PeplError::invalid("backbone needs at least one stage with nonzero widths"));
        }
        if self.num_classes < 2 {
            return Err(PeplError::invalid("backbone needs at least 2 classes"));
        }
        let pools = self.widths.len() - 1;
        let div = 1usize << pools;
        if !self.height.is_multiple_of(div) || !self.width.is_multiple_of(div) {
            return Err(PeplError::invalid(format!(
                "input {}x{} is not divisible by {div} for {pools} pooling stages",
                self.height, self.width
            )));
        }
        let (fh, fw) = self.tap_size();
        if fh < 2 || fw < 2 {
            return Err(PeplError::invalid(format!(
                "tap feature map {fh}x{fw} is smaller than 2x2"
            )));
        }
        Ok(())
    }

    pub fn tap_size(&self) -> (usize, usize) {
        let pools = self.widths.len().saturating_sub(1);
        (self.height >> pools, self.width >> pools)
    }

    pub fn tap_channels(&self) -> usize {
        *self.widths.last().unwrap_or(&0)
    }

    pub fn tap_layer(&self) -> String {
        format!("stage{}", self.widths.len())
    }
}

/// Logits and tap features from one forward pass, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneOutput {
    pub logits: Vec<f32>,
    pub num_classes: usize,
    /// `[n × d × h × w]`
    pub features: Vec<f32>,
    pub feature_shape: (usize, usize, usize),
    pub tap_layer: String,
}

impl BackboneOutput {
    pub fn len(&self) -> usize {
        self.logits.len() / self.num_classes
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn logits_f64(&self) -> Vec<f64> {
        self.logits.iter().map(|&v| v as f64).collect()
    }

    pub fn logit_row(&self, i: usize) -> &[f32] {
        &self.logits[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn feature_map(&self, i: usize) -> FeatureMap {
        let (d, h, w) = self.feature_shape;
        let size = d * h * w;
        FeatureMap::new(d, h, w, self.features[i * size..(i + 1) * size].iter().map(|&v| v as f64).collect())
            .expect("backbone features are well-shaped and finite")
            .with_source(i, self.tap_layer.clone())
    }
}

/// Inference surface shared by any classifier with a pooled linear head.
pub trait Backbone {
    fn num_classes(&self) -> usize;
    fn input_shape(&self) -> (usize, usize, usize);
    fn forward(&self, images: &[Image]) -> Result<BackboneOutput>;
    fn classifier_weights(&self) -> ClassWeights;
    fn classifier_bias(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq)]
struct Conv {
    in_c: usize,
    out_c: usize,
    /// `[out_c × in_c·9]`
    weight: Vec<f32>,
    bias: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyBackbone {
    config: ToyBackboneConfig,
    convs: Vec<Conv>,
    /// `[C × d]`
    fc_weight: Vec<f32>,
    fc_bias: Vec<f32>,
}

/// Parameter gradients in the same order as [`ToyBackbone::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f32>>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|v| v.is_finite())
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors
            .iter()
            .flatten()
            .map(|&v| (v as f64) * (v as f64))
            .sum::<f64>()
            .sqrt()
    }
}

struct StageCache {
    col: Vec<f32>,
    /// Post-ReLU activations (pre-pool).
    act: Vec<f32>,
    pool_idx: Vec<u32>,
}

struct SampleCache {
    stages: Vec<StageCache>,
    pooled: Vec<f32>,
}

/// Everything the backward pass needs from a training forward pass.
pub struct ForwardCache {
    samples: Vec<SampleCache>,
}

fn im2col(input: &[f32], c: usize, h: usize, w: usize) -> Vec<f32> {
    let hw = h * w;
    let mut col = vec![0.0f32; c * 9 * hw];
    for ci in 0..c {
        let plane = &input[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut col[(ci * 9 + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    let dst = &mut row[y * w..(y + 1) * w];
                    match kx {
                        0 => dst[1..].copy_from_slice(&src[..w - 1]),
                        1 => dst.copy_from_slice(src),
                        _ => dst[..w - 1].copy_from_slice(&src[1..]),
                    }
                }
            }
        }
    }
    col
}

fn col2im(col: &[f32], c: usize, h: usize, w: usize) -> Vec<f32> {
    let hw = h * w;
    let mut out = vec![0.0f32; c * hw];
    for ci in 0..c {
        let plane = &mut out[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &col[(ci * 9 + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &row[y * w..(y + 1) * w];
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    match kx {
                        0 => dst[..w - 1].iter_mut().zip(&src[1..]).for_each(|(d, s)| *d += s),
                        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d += s),
                        _ => dst[1..].iter_mut().zip(&src[..w - 1]).for_each(|(d, s)| *d += s),
                    }
                }
            }
        }
    }
    out
}

/// `c[m×n] = a[m×k] · b[k×n] + beta · c` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    (rsa, csa): (isize, isize),
    b: &[f32],
    (rsb, csb): (isize, isize),
    beta: f32,
    c: &mut [f32],
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: callers pass buffers sized for the given dimensions and strides.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn max_pool(act: &[f32], c: usize, h: usize, w: usize) -> (Vec<f32>, Vec<u32>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut idx = Vec::with_capacity(c * oh * ow);
    for ci in 0..c {
        let base = ci * h * w;
        for y in 0..oh {
            for x in 0..ow {
                let mut best = base + 2 * y * w + 2 * x;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let j = base + (2 * y + dy) * w + 2 * x + dx;
                    if act[j] > act[best] {
                        best = j;
                    }
                }
                out.push(act[best]);
                idx.push(best as u32);
            }
        }
    }
    (out, idx)
}

/// Subtracted from every input pixel before the first convolution.
pub const INPUT_CENTER: f32 = 0.5;

impl ToyBackbone {
    pub fn new(config: ToyBackboneConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut convs = Vec::with_capacity(config.widths.len());
        let mut in_c = config.input_channels;
        for &out_c in &config.widths {
            let fan_in = (in_c * 9) as f32;
            let normal = Normal::new(0.0f32, (2.0 / fan_in).sqrt()).expect("positive std");
            convs.push(Conv {
                in_c,
                out_c,
                weight: (0..out_c * in_c * 9).map(|_| normal.sample(&mut rng)).collect(),
                bias: vec![0.0; out_c],
            });
            in_c = out_c;
        }
        let d = config.tap_channels();
        let normal = Normal::new(0.0f32, (1.0 / d as f32).sqrt()).expect("positive std");
        let fc_weight = (0..config.num_classes * d).map(|_| normal.sample(&mut rng)).collect();
        Ok(Self {
            fc_bias: vec![0.0; config.num_classes],
            config,
            convs,
            fc_weight,
        })
    }

    pub fn config(&self) -> &ToyBackboneConfig {
        &self.config
    }

    /// Parameter tensors in a fixed order: per stage (weight, bias), then
    /// classifier (weight, bias).
    pub fn params(&self) -> Vec<&[f32]> {
        let mut out: Vec<&[f32]> = Vec::new();
        for conv in &self.convs {
            out.push(&conv.weight);
            out.push(&conv.bias);
        }
        out.push(&self.fc_weight);
        out.push(&self.fc_bias);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f32]> {
        let mut out: Vec<&mut [f32]> = Vec::new();
        for conv in &mut self.convs {
            out.push(&mut conv.weight);
            out.push(&mut conv.bias);
        }
        out.push(&mut self.fc_weight);
        out.push(&mut self.fc_bias);
        out
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        self.params().iter().map(|p| p.len()).collect()
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients {
            tensors: self.params().iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    /// Replaces all parameters; lengths must match [`Self::param_shapes`].
    pub fn load_params(&mut self, tensors: &[Vec<f32>]) -> Result<()> {
        let shapes = self.param_shapes();
        if tensors.len() != shapes.len() || tensors.iter().zip(&shapes).any(|(t, &s)| t.len() != s) {
            return Err(PeplError::shape(
                format!("{shapes:?}"),
                format!("{:?}", tensors.iter().map(Vec::len).collect::<Vec<_>>()),
            ));
        }
        for (dst, src) in self.params_mut().into_iter().zip(tensors) {
            dst.copy_from_slice(src);
        }
        Ok(())
    }

    fn check_images(&self, images: &[Image]) -> Result<()> {
        let want = (self.config.input_channels, self.config.height, self.config.width);
        if let Some(bad) = images.iter().find(|im| im.shape() != want) {
            return Err(PeplError::shape(format!("{want:?}"), format!("{:?}", bad.shape())));
        }
        Ok(())
    }

    fn forward_sample(&self, image: &Image, keep: bool) -> (Vec<f32>, Vec<f32>, Option<SampleCache>) {
        let (mut h, mut w) = (self.config.height, self.config.width);
        let mut x: Vec<f32> = image.data.iter().map(|v| v - INPUT_CENTER).collect();
        let mut stages = Vec::new();
        let last = self.convs.len() - 1;
        for (s, conv) in self.convs.iter().enumerate() {
            let hw = h * w;
            let col = im2col(&x, conv.in_c, h, w);
            let mut act = vec![0.0f32; conv.out_c * hw];
            let k = conv.in_c * 9;
            gemm(conv.out_c, k, hw, &conv.weight, (k as isize, 1), &col, (hw as isize, 1), 0.0, &mut act);
            for (o, chunk) in act.chunks_exact_mut(hw).enumerate() {
                let b = conv.bias[o];
                chunk.iter_mut().for_each(|v| *v = (*v + b).max(0.0));
            }
            if s < last {
                let (pooled, idx) = max_pool(&act, conv.out_c, h, w);
                x = pooled;
                if keep {
                    stages.push(StageCache { col, act, pool_idx: idx });
                }
                h /= 2;
                w /= 2;
            } else {
                x = act.clone();
                if keep {
                    stages.push(StageCache {
                        col,
                        act,
                        pool_idx: Vec::new(),
                    });
                }
            }
        }
        let d = self.config.tap_channels();
        let hw = (h * w) as f32;
        let pooled: Vec<f32> = x.chunks_exact(h * w).map(|c| c.iter().sum::<f32>() / hw).collect();
        let mut logits = self.fc_bias.clone();
        for (c, l) in logits.iter_mut().enumerate() {
            let row = &self.fc_weight[c * d..(c + 1) * d];
            *l += row.iter().zip(&pooled).map(|(a, b)| a * b).sum::<f32>();
        }
        let cache = keep.then_some(SampleCache { stages, pooled });
        (logits, x, cache)
    }

    fn forward_impl(&self, images: &[Image], keep: bool) -> Result<(BackboneOutput, Option<ForwardCache>)> {
        self.check_images(images)?;
        let (fh, fw) = self.config.tap_size();
        let d = self.config.tap_channels();
        let mut logits = Vec::with_capacity(images.len() * self.config.num_classes);
        let mut features = Vec::with_capacity(images.len() * d * fh * fw);
        let mut samples = Vec::new();
        for image in images {
            let (l, f, cache) = self.forward_sample(image, keep);
            logits.extend(l);
            features.extend(f);
            samples.extend(cache);
        }
        let out = BackboneOutput {
            logits,
            num_classes: self.config.num_classes,
            features,
            feature_shape: (d, fh, fw),
            tap_layer: self.config.tap_layer(),
        };
        Ok((out, keep.then_some(ForwardCache { samples })))
    }

    pub fn forward_train(&self, images: &[Image]) -> Result<(BackboneOutput, ForwardCache)> {
        let (out, cache) = self.forward_impl(images, true)?;
        Ok((out, cache.expect("cache requested")))
    }

    /// Accumulates parameter gradients for `∂L/∂logits = logit_grad` into `grads`.
    pub fn backward(&self, cache: &ForwardCache, logit_grad: &[f32], grads: &mut Gradients) -> Result<()> {
        let n_classes = self.config.num_classes;
        if logit_grad.len() != cache.samples.len() * n_classes {
            return Err(PeplError::shape(
                format!("{}x{n_classes} logit gradient", cache.samples.len()),
                logit_grad.len().to_string(),
            ));
        }
        let d = self.config.tap_channels();
        let (fh, fw) = self.config.tap_size();
        let n_stages = self.convs.len();
        let fc_w = 2 * n_stages;
        for (sample, g) in cache.samples.iter().zip(logit_grad.chunks_exact(n_classes)) {
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            let mut d_pooled = vec![0.0f32; d];
            for (c, &gc) in g.iter().enumerate() {
                let row = &self.fc_weight[c * d..(c + 1) * d];
                let gw = &mut grads.tensors[fc_w][c * d..(c + 1) * d];
                for j in 0..d {
                    gw[j] += gc * sample.pooled[j];
                    d_pooled[j] += gc * row[j];
                }
                grads.tensors[fc_w + 1][c] += gc;
            }
            let hw_tap = (fh * fw) as f32;
            let mut dx: Vec<f32> = d_pooled
                .iter()
                .flat_map(|&v| std::iter::repeat_n(v / hw_tap, fh * fw))
                .collect();
            let (mut h, mut w) = (fh, fw);
            for s in (0..n_stages).rev() {
                let conv = &self.convs[s];
                let stage = &sample.stages[s];
                if s < n_stages - 1 {
                    // un-pool into the pre-pool activation grid
                    let mut up = vec![0.0f32; conv.out_c * h * 2 * w * 2];
                    for (&j, &v) in stage.pool_idx.iter().zip(&dx) {
                        up[j as usize] += v;
                    }
                    dx = up;
                    h *= 2;
                    w *= 2;
                }
                let hw = h * w;
                for (v, &a) in dx.iter_mut().zip(&stage.act) {
                    if a <= 0.0 {
                        *v = 0.0;
                    }
                }
                let k = conv.in_c * 9;
                gemm(
                    conv.out_c,
                    hw,
                    k,
                    &dx,
                    (hw as isize, 1),
                    &stage.col,
                    (1, hw as isize),
                    1.0,
                    &mut grads.tensors[2 * s],
                );
                for (o, chunk) in dx.chunks_exact(hw).enumerate() {
                    grads.tensors[2 * s + 1][o] += chunk.iter().sum::<f32>();
                }
                if s > 0 {
                    let mut dcol = vec![0.0f32; k * hw];
                    gemm(k, conv.out_c, hw, &conv.weight, (1, k as isize), &dx, (hw as isize, 1), 0.0, &mut dcol);
                    dx = col2im(&dcol, conv.in_c, h, w);
                }
            }
        }
        Ok(())
    }
}

impl Backbone for ToyBackbone {
    fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn input_shape(&self) -> (usize, usize, usize) {
        (self.config.input_channels, self.config.height, self.config.width)
    }

    fn forward(&self, images: &[Image]) -> Result<BackboneOutput> {
        Ok(self.forward_impl(images, false)?.0)
    }

    fn classifier_weights(&self) -> ClassWeights {
        ClassWeights::new(
            self.config.num_classes,
            self.config.tap_channels(),
            self.fc_weight.iter().map(|&v| v as f64).collect(),
        )
        .expect("classifier weights are well-shaped")
    }

    fn classifier_bias(&self) -> Vec<f64> {
        self.fc_bias.iter().map(|&v| v as f64).collect()
    }
}

/// Momentum SGD with optional L2 weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct Sgd {
    pub momentum: f32,
    pub weight_decay: f32,
    pub velocity: Vec<Vec<f32>>,
}

impl Sgd {
    pub fn new(model: &ToyBackbone, momentum: f32, weight_decay: f32) -> Self {
        Self {
            momentum,
            weight_decay,
            velocity: model.params().iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn step(&mut self, model: &mut ToyBackbone, grads: &Gradients, lr: f32) {
        for ((param, grad), vel) in model.params_mut().into_iter().zip(&grads.tensors).zip(&mut self.velocity) {
            for ((p, &g), v) in param.iter_mut().zip(grad).zip(vel.iter_mut()) {
                let g = g + self.weight_decay * *p;
                *v = self.momentum * *v + g;
                *p -= lr * *v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cam::weighted_sum;
    use rand::Rng;

    fn tiny(seed: u64) -> ToyBackbone {
        ToyBackbone::new(ToyBackboneConfig {
            input_channels: 2,
            height: 8,
            width: 8,
            widths: vec![3, 4],
            num_classes: 3,
            seed,
        })
        .unwrap()
    }

    fn random_images(n: usize, c: usize, h: usize, w: usize, seed: u64) -> Vec<Image> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Image::new(c, h, w, (0..c * h * w).map(|_| rng.gen::<f32>()).collect()).unwrap())
            .collect()
    }

    #[test]
    fn config_validation() {
        let mut cfg = ToyBackboneConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.tap_size(), (8, 8));
        cfg.widths = vec![4, 4, 4, 4, 4, 4];
        assert!(cfg.validate().is_err());
        cfg.widths = vec![4, 4];
        cfg.height = 31;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn shapes_and_determinism() {
        let model = ToyBackbone::new(ToyBackboneConfig::default()).unwrap();
        let mut images = random_images(2, 3, 32, 32, 1);
        images.push(images[0].clone());
        let out = model.forward(&images).unwrap();
        assert_eq!(out.logits.len(), 3 * 10);
        assert_eq!(out.feature_shape, (64, 8, 8));
        assert_eq!(out.features.len(), 3 * 64 * 64);
        assert_eq!(out.logit_row(0), out.logit_row(2));
        let again = ToyBackbone::new(ToyBackboneConfig::default()).unwrap().forward(&images).unwrap();
        assert_eq!(out, again);
        assert_eq!(model.classifier_weights().data.len(), 10 * 64);
        assert!(model.forward(&random_images(1, 1, 32, 32, 0)).is_err());
    }

    #[test]
    fn pooled_cam_matches_bias_free_logit() {
        let model = ToyBackbone::new(ToyBackboneConfig::default()).unwrap();
        let images = random_images(4, 3, 32, 32, 2);
        let out = model.forward(&images).unwrap();
        let weights = model.classifier_weights();
        let bias = model.classifier_bias();
        for i in 0..images.len() {
            let f = out.feature_map(i);
            for c in 0..10 {
                let pooled = weighted_sum(&f, &weights, c).unwrap().sum() / 64.0;
                let logit = out.logit_row(i)[c] as f64 - bias[c];
                assert!((pooled - logit).abs() <= 1e-4 * logit.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut model = tiny(3);
        let images = random_images(2, 2, 8, 8, 4);
        let labels = [0usize, 2];
        let loss_of = |m: &ToyBackbone| -> f64 {
            let out = m.forward(&images).unwrap();
            crate::objectives::supervised_loss(&out.logits_f64(), &labels, 3).unwrap()
        };
        let (out, cache) = model.forward_train(&images).unwrap();
        let (_, g) = crate::objectives::supervised_loss_grad(&out.logits_f64(), &labels, 3).unwrap();
        let g: Vec<f32> = g.iter().map(|&v| v as f32).collect();
        let mut grads = model.zero_grads();
        model.backward(&cache, &g, &mut grads).unwrap();

        let eps = 1e-2f32;
        let mut checked = 0;
        for t in 0..grads.tensors.len() {
            for j in (0..grads.tensors[t].len()).step_by(5) {
                let orig = model.params()[t][j];
                model.params_mut()[t][j] = orig + eps;
                let up = loss_of(&model);
                model.params_mut()[t][j] = orig - eps;
                let down = loss_of(&model);
                model.params_mut()[t][j] = orig;
                let numeric = (up - down) / (2.0 * eps as f64);
                let analytic = grads.tensors[t][j] as f64;
                assert!(
                    (numeric - analytic).abs() <= 2e-3 + 0.05 * analytic.abs(),
                    "tensor {t} index {j}: numeric {numeric}, analytic {analytic}"
                );
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn sgd_step_changes_weights() {
        let mut model = tiny(5);
        let before = model.classifier_weights();
        let images = random_images(3, 2, 8, 8, 6);
        let (out, cache) = model.forward_train(&images).unwrap();
        let (_, g) = crate::objectives::supervised_loss_grad(&out.logits_f64(), &[0, 1, 2], 3).unwrap();
        let mut grads = model.zero_grads();
        model.backward(&cache, &g.iter().map(|&v| v as f32).collect::<Vec<_>>(), &mut grads).unwrap();
        assert!(grads.l2_norm() > 0.0);
        let mut opt = Sgd::new(&model, 0.9, 0.0);
        opt.step(&mut model, &grads, 0.1);
        assert_ne!(model.classifier_weights(), before);
    }
}
