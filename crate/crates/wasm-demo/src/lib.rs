//! Browser demo: threshold evolution, semantic mix explorer, and the
//! learning-rate schedule, exported through wasm-bindgen.
//!
//! The mix explorer has no trained network in the page, so it derives a
//! two-channel feature map straight from the synthetic image (red-ink
//! response and object contrast) and runs the regular CAM pipeline on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use pepl_core::cam::{semantic_map, ClassWeights, FeatureMap, SemanticMap};
use pepl_core::datagen::{generate, PixelBox, SyntheticSpec};
use pepl_core::image::Image;
use pepl_core::mixer::{compose, semantic_proportions, MixMask};
use pepl_core::objectives::softmax;
use pepl_core::threshold::{PredictionBatch, ThresholdState};
use pepl_core::trainer::LrSchedule;
use pepl_core::viz::heatmap;

fn js(e: pepl_core::PeplError) -> JsError {
    JsError::new(&e.to_string())
}

/// Interleaved RGBA bytes for a canvas `ImageData`.
pub fn to_rgba(image: &Image) -> Vec<u8> {
    let planar = image.to_u8();
    let plane = image.height * image.width;
    let mut out = Vec::with_capacity(plane * 4);
    for i in 0..plane {
        for c in 0..3 {
            out.push(planar[(c % image.channels) * plane + i]);
        }
        out.push(255);
    }
    out
}

/// Threshold statistics of a simulated learner whose confidence grows over
/// time, classes maturing at different speeds.
#[wasm_bindgen]
pub struct ThresholdTrace {
    num_classes: usize,
    tau: Vec<f64>,
    class_thresholds: Vec<f64>,
    selection_rate: Vec<f64>,
}

impl ThresholdTrace {
    pub fn simulate(num_classes: usize, beta: f64, steps: usize, batch: usize, seed: u64) -> pepl_core::Result<Self> {
        let mut state = ThresholdState::init(num_classes, beta)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trace = Self {
            num_classes,
            tau: Vec::with_capacity(steps),
            class_thresholds: Vec::with_capacity(steps * num_classes),
            selection_rate: Vec::with_capacity(steps),
        };
        let horizon = (steps as f64 / 4.0).max(1.0);
        for t in 0..steps {
            let skill = 1.0 - (-(t as f64) / horizon).exp();
            let rows: Vec<Vec<f64>> = (0..batch.max(1))
                .map(|_| {
                    let y = rng.gen_range(0..num_classes);
                    let speed = 1.0 - 0.6 * y as f64 / num_classes as f64;
                    let logits: Vec<f64> = (0..num_classes)
                        .map(|k| {
                            let signal = if k == y { 7.0 * skill * speed } else { 0.0 };
                            signal + rng.gen_range(-1.0..1.0)
                        })
                        .collect();
                    softmax(&logits)
                })
                .collect();
            let predictions = PredictionBatch::from_rows(&rows)?;
            state = state.update(&predictions)?;
            let selected = state.select(&predictions)?;
            trace.tau.push(state.tau_global);
            trace.class_thresholds.extend(state.class_thresholds());
            trace.selection_rate.push(selected.len() as f64 / predictions.len() as f64);
        }
        Ok(trace)
    }
}

#[wasm_bindgen]
impl ThresholdTrace {
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn steps(&self) -> usize {
        self.tau.len()
    }

    pub fn tau(&self) -> Vec<f64> {
        self.tau.clone()
    }

    /// Row-major `steps × num_classes`.
    pub fn class_thresholds(&self) -> Vec<f64> {
        self.class_thresholds.clone()
    }

    pub fn selection_rate(&self) -> Vec<f64> {
        self.selection_rate.clone()
    }
}

#[wasm_bindgen]
pub fn simulate_thresholds(num_classes: usize, beta: f64, steps: usize, batch: usize, seed: u32) -> Result<ThresholdTrace, JsError> {
    ThresholdTrace::simulate(num_classes, beta, steps, batch, seed as u64).map_err(js)
}

/// Per-step learning rates of a schedule.
#[wasm_bindgen]
pub fn lr_curve(
    initial: f64,
    step_period: usize,
    decay: f64,
    cosine_tail: usize,
    total_epochs: usize,
    steps_per_epoch: usize,
) -> Vec<f64> {
    let s = LrSchedule {
        initial,
        step_period,
        decay,
        cosine_tail: cosine_tail.min(total_epochs),
        total_epochs,
        steps_per_epoch: steps_per_epoch.max(1),
    };
    (0..s.total_steps()).map(|t| s.lr_at_step(t)).collect()
}

const FEATURE_STRIDE: usize = 4;
/// Classifier row over the two derived channels: ink dominates.
const DERIVED_WEIGHTS: [f64; 2] = [1.0, 0.06];

/// Two coarse channels from an RGB image: red-ink response and contrast
/// against the median border colour, average-pooled by `FEATURE_STRIDE`.
pub fn derived_features(image: &Image) -> pepl_core::Result<FeatureMap> {
    let (fh, fw) = (image.height / FEATURE_STRIDE, image.width / FEATURE_STRIDE);
    let border: Vec<[f32; 3]> = (0..image.width)
        .map(|x| [image.at(0, 0, x), image.at(1, 0, x), image.at(2, 0, x)])
        .collect();
    let bg: [f32; 3] = [0, 1, 2].map(|c| {
        let mut v: Vec<f32> = border.iter().map(|p| p[c]).collect();
        v.sort_by(f32::total_cmp);
        v[v.len() / 2]
    });
    let mut data = vec![0.0; 2 * fh * fw];
    let area = (FEATURE_STRIDE * FEATURE_STRIDE) as f64;
    for y in 0..fh * FEATURE_STRIDE {
        for x in 0..fw * FEATURE_STRIDE {
            let (r, g, b) = (image.at(0, y, x), image.at(1, y, x), image.at(2, y, x));
            let ink = (r - 0.5 * (g + b) - 0.3).max(0.0) as f64;
            let contrast = ((r - bg[0]).abs() + (g - bg[1]).abs() + (b - bg[2]).abs()) as f64 / 3.0;
            let cell = (y / FEATURE_STRIDE) * fw + x / FEATURE_STRIDE;
            data[cell] += ink / area;
            data[fh * fw + cell] += contrast / area;
        }
    }
    FeatureMap::new(2, fh, fw, data)
}

#[wasm_bindgen]
pub struct MixOutcome {
    rho_a: f64,
    rho_b: f64,
    area: f64,
    rgba: Vec<u8>,
}

#[wasm_bindgen]
impl MixOutcome {
    pub fn rho_a(&self) -> f64 {
        self.rho_a
    }

    pub fn rho_b(&self) -> f64 {
        self.rho_b
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
}

/// Two synthetic images with their semantic maps; rectangles pasted from
/// `b` into `a` report semantic and area-based label weights.
#[wasm_bindgen]
pub struct MixExplorer {
    images: [Image; 2],
    maps: [SemanticMap; 2],
    boxes: [PixelBox; 2],
}

impl MixExplorer {
    pub fn build(seed: u64, class_a: usize, class_b: usize) -> pepl_core::Result<Self> {
        let spec = SyntheticSpec {
            per_class: 1,
            seed,
            ..SyntheticSpec::default()
        };
        let data = generate(&spec)?;
        let pick = |c: usize| -> pepl_core::Result<(Image, SemanticMap, PixelBox)> {
            let i = data
                .labels
                .iter()
                .position(|&l| l == c)
                .ok_or(pepl_core::PeplError::ClassOutOfRange {
                    class: c,
                    num_classes: spec.num_classes,
                })?;
            let img = data.images[i].clone();
            let weights = ClassWeights::new(1, 2, DERIVED_WEIGHTS.to_vec())?;
            let map = semantic_map(&derived_features(&img)?, &weights, 0, (img.height, img.width))?;
            Ok((img, map, data.marker_boxes[i]))
        };
        let (ia, ma, ba) = pick(class_a)?;
        let (ib, mb, bb) = pick(class_b)?;
        Ok(Self {
            images: [ia, ib],
            maps: [ma, mb],
            boxes: [ba, bb],
        })
    }

    pub fn image(&self, which: usize) -> &Image {
        &self.images[which.min(1)]
    }

    pub fn map(&self, which: usize) -> &SemanticMap {
        &self.maps[which.min(1)]
    }

    pub fn marker_box(&self, which: usize) -> PixelBox {
        self.boxes[which.min(1)]
    }

    /// Pastes `[y0, y1) × [x0, x1)` of `b` into `a`; coordinates are clamped
    /// to the image and swapped if reversed.
    pub fn mix_rect(&self, y0: usize, x0: usize, y1: usize, x1: usize) -> pepl_core::Result<(f64, f64, f64, Image)> {
        let (h, w) = (self.images[0].height, self.images[0].width);
        let (ya, yb) = (y0.min(y1).min(h), y0.max(y1).min(h));
        let (xa, xb) = (x0.min(x1).min(w), x0.max(x1).min(w));
        let mask = MixMask::rect(h, w, ya, xa, yb, xb)?;
        let mixed = compose(&self.images[0], &self.images[1], &mask)?;
        let (ra, rb) = semantic_proportions(&self.maps[0], &self.maps[1], &mask)?;
        Ok((ra, rb, mask.area_fraction, mixed))
    }
}

#[wasm_bindgen]
impl MixExplorer {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, class_a: usize, class_b: usize) -> Result<MixExplorer, JsError> {
        Self::build(seed as u64, class_a, class_b).map_err(js)
    }

    pub fn width(&self) -> usize {
        self.images[0].width
    }

    pub fn height(&self) -> usize {
        self.images[0].height
    }

    pub fn image_rgba(&self, which: usize) -> Vec<u8> {
        to_rgba(self.image(which))
    }

    pub fn heatmap_rgba(&self, which: usize) -> Vec<u8> {
        to_rgba(&heatmap(self.map(which)))
    }

    /// `[y0, x0, y1, x1]` of the marker in image `which`.
    pub fn marker(&self, which: usize) -> Vec<usize> {
        let b = self.marker_box(which);
        vec![b.y0, b.x0, b.y1, b.x1]
    }

    pub fn mix(&self, y0: usize, x0: usize, y1: usize, x1: usize) -> Result<MixOutcome, JsError> {
        let (rho_a, rho_b, area, img) = self.mix_rect(y0, x0, y1, x1).map_err(js)?;
        Ok(MixOutcome {
            rho_a,
            rho_b,
            area,
            rgba: to_rgba(&img),
        })
    }
}
