//! Class activation maps and their normalized semantic form.

use serde::{Deserialize, Serialize};

use crate::error::{PeplError, Result};

/// Totals below this are treated as an all-zero CAM.
pub const DEGENERATE_MASS: f64 = 1e-12;

/// A dense row-major 2-D grid of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(PeplError::shape(
                format!("{height}x{width} grid"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn size(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

/// Activations `[channels × h × w]` at the CAM tap layer for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
    pub image_id: usize,
    pub tap_layer: String,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 || data.len() != channels * height * width {
            return Err(PeplError::shape(
                format!("{channels}x{height}x{width} features"),
                format!("{} values", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(PeplError::invalid("feature map contains non-finite values"));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
            image_id: 0,
            tap_layer: String::new(),
        })
    }

    pub fn with_source(mut self, image_id: usize, tap_layer: impl Into<String>) -> Self {
        self.image_id = image_id;
        self.tap_layer = tap_layer.into();
        self
    }

    pub fn channel(&self, d: usize) -> &[f64] {
        let hw = self.height * self.width;
        &self.data[d * hw..(d + 1) * hw]
    }
}

/// Classifier matrix `[C × channels]` over pooled tap features.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    pub num_classes: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl ClassWeights {
    pub fn new(num_classes: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if num_classes == 0 || channels == 0 || data.len() != num_classes * channels {
            return Err(PeplError::shape(
                format!("{num_classes}x{channels} weights"),
                format!("{} values", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(PeplError::invalid("class weights contain non-finite values"));
        }
        Ok(Self {
            num_classes,
            channels,
            data,
        })
    }

    pub fn row(&self, class_id: usize) -> Result<&[f64]> {
        if class_id >= self.num_classes {
            return Err(PeplError::ClassOutOfRange {
                class: class_id,
                num_classes: self.num_classes,
            });
        }
        Ok(&self.data[class_id * self.channels..(class_id + 1) * self.channels])
    }
}

/// Nonnegative map at image resolution summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticMap {
    pub map: Grid,
    pub image_id: usize,
    pub class_id: usize,
}

impl SemanticMap {
    pub fn uniform(height: usize, width: usize) -> Self {
        Self {
            map: Grid::filled(height, width, 1.0 / (height * width) as f64),
            image_id: 0,
            class_id: 0,
        }
    }

    pub fn size(&self) -> (usize, usize) {
        self.map.size()
    }

    pub fn data(&self) -> &[f64] {
        &self.map.data
    }
}

/// Channel-weighted sum of the feature map using the classifier row of
/// `class_id`, at feature resolution and without clamping.
pub fn weighted_sum(features: &FeatureMap, weights: &ClassWeights, class_id: usize) -> Result<Grid> {
    if weights.channels != features.channels {
        return Err(PeplError::shape(
            format!("{} weight columns", features.channels),
            weights.channels.to_string(),
        ));
    }
    let row = weights.row(class_id)?;
    let hw = features.height * features.width;
    let mut out = vec![0.0; hw];
    for (d, &w) in row.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, &f) in out.iter_mut().zip(features.channel(d)) {
            *o += w * f;
        }
    }
    Grid::new(features.height, features.width, out)
}

/// Bilinear resize with half-pixel centers; an equal-size resize is the
/// identity and a constant grid stays exactly constant.
pub fn upsample_bilinear(grid: &Grid, out_h: usize, out_w: usize) -> Result<Grid> {
    if out_h == 0 || out_w == 0 {
        return Err(PeplError::invalid("upsample target must be non-empty"));
    }
    if (out_h, out_w) == grid.size() {
        return Ok(grid.clone());
    }
    let axis = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        (0..out)
            .map(|o| {
                let src = ((o as f64 + 0.5) * inp as f64 / out as f64 - 0.5).max(0.0);
                let lo = (src.floor() as usize).min(inp - 1);
                let hi = (lo + 1).min(inp - 1);
                (lo, hi, src - lo as f64)
            })
            .collect()
    };
    let ys = axis(out_h, grid.height);
    let xs = axis(out_w, grid.width);
    let mut data = Vec::with_capacity(out_h * out_w);
    for &(y0, y1, ty) in &ys {
        for &(x0, x1, tx) in &xs {
            let top = lerp(grid.at(y0, x0), grid.at(y0, x1), tx);
            let bottom = lerp(grid.at(y1, x0), grid.at(y1, x1), tx);
            data.push(lerp(top, bottom, ty));
        }
    }
    Grid::new(out_h, out_w, data)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Weighted channel sum for `class_id`, clamped at zero, resized to `out_size`.
pub fn raw_cam(
    features: &FeatureMap,
    weights: &ClassWeights,
    class_id: usize,
    out_size: (usize, usize),
) -> Result<Grid> {
    let (out_h, out_w) = out_size;
    if out_h < features.height || out_w < features.width {
        return Err(PeplError::invalid(format!(
            "output size {out_h}x{out_w} is smaller than the feature grid {}x{}",
            features.height, features.width
        )));
    }
    let mut cam = weighted_sum(features, weights, class_id)?;
    for v in &mut cam.data {
        *v = v.max(0.0);
    }
    upsample_bilinear(&cam, out_h, out_w)
}

/// Divides a nonnegative CAM by its total; an all-zero CAM maps to uniform.
pub fn normalize(cam: &Grid) -> Result<SemanticMap> {
    if let Some((index, &value)) = cam.data.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(PeplError::NegativeCam { index, value });
    }
    let total = cam.sum();
    if !total.is_finite() {
        return Err(PeplError::invalid("CAM total is not finite"));
    }
    if total < DEGENERATE_MASS {
        return Ok(SemanticMap::uniform(cam.height, cam.width));
    }
    let map = Grid {
        height: cam.height,
        width: cam.width,
        data: cam.data.iter().map(|v| v / total).collect(),
    };
    Ok(SemanticMap {
        map,
        image_id: 0,
        class_id: 0,
    })
}

pub fn semantic_map(
    features: &FeatureMap,
    weights: &ClassWeights,
    class_id: usize,
    out_size: (usize, usize),
) -> Result<SemanticMap> {
    let mut map = normalize(&raw_cam(features, weights, class_id, out_size)?)?;
    map.image_id = features.image_id;
    map.class_id = class_id;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn two_by_two() -> FeatureMap {
        FeatureMap::new(2, 2, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn row(w: &[f64]) -> ClassWeights {
        ClassWeights::new(1, w.len(), w.to_vec()).unwrap()
    }

    #[test]
    fn raw_cam_by_hand() {
        let cam = raw_cam(&two_by_two(), &row(&[2.0, 1.0]), 0, (2, 2)).unwrap();
        assert_eq!(cam.data, vec![2.0, 1.0, 1.0, 2.0]);

        let zero = raw_cam(&two_by_two(), &row(&[0.0, 0.0]), 0, (2, 2)).unwrap();
        assert!(zero.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_evidence_is_clamped() {
        let pre = weighted_sum(&two_by_two(), &row(&[1.0, -3.0]), 0).unwrap();
        assert_eq!(pre.data, vec![1.0, -3.0, -3.0, 1.0]);
        let cam = raw_cam(&two_by_two(), &row(&[1.0, -3.0]), 0, (2, 2)).unwrap();
        assert_eq!(cam.data, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn raw_cam_errors() {
        let w = ClassWeights::new(2, 2, vec![1.0; 4]).unwrap();
        assert!(matches!(
            raw_cam(&two_by_two(), &w, 2, (2, 2)),
            Err(PeplError::ClassOutOfRange { .. })
        ));
        assert!(raw_cam(&two_by_two(), &w, 0, (1, 2)).is_err());
        let wide = ClassWeights::new(1, 3, vec![1.0; 3]).unwrap();
        assert!(raw_cam(&two_by_two(), &wide, 0, (2, 2)).is_err());
    }

    #[test]
    fn normalize_by_hand() {
        let s = normalize(&Grid::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap()).unwrap();
        let want = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0];
        for (g, w) in s.data().iter().zip(want) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-15);
        }
        let flat = normalize(&Grid::filled(4, 4, 0.0)).unwrap();
        assert!(flat.data().iter().all(|&v| v == 1.0 / 16.0));
        assert!(matches!(
            normalize(&Grid::new(1, 2, vec![1.0, -0.5]).unwrap()),
            Err(PeplError::NegativeCam { index: 1, .. })
        ));
    }

    #[test]
    fn normalize_is_idempotent() {
        let once = normalize(&Grid::new(2, 3, vec![0.3, 1.0, 2.0, 0.0, 5.0, 0.7]).unwrap()).unwrap();
        let twice = normalize(&once.map).unwrap();
        for (a, b) in once.data().iter().zip(twice.data()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn semantic_map_composition() {
        let s = semantic_map(&two_by_two(), &row(&[2.0, 1.0]), 0, (2, 2)).unwrap();
        assert_abs_diff_eq!(s.map.at(0, 0), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.map.at(0, 1), 1.0 / 6.0, epsilon = 1e-15);
        let u = semantic_map(&two_by_two(), &row(&[0.0, 0.0]), 0, (8, 8)).unwrap();
        assert!(u.data().iter().all(|&v| v == 1.0 / 64.0));
    }

    #[test]
    fn upsampling_keeps_constants_exact() {
        let g = Grid::filled(3, 5, 0.125);
        let up = upsample_bilinear(&g, 17, 32).unwrap();
        assert!(up.data.iter().all(|&v| v == 0.125));
    }

    #[test]
    fn upsampling_interpolates_between_centers() {
        let g = Grid::new(1, 2, vec![0.0, 1.0]).unwrap();
        let up = upsample_bilinear(&g, 1, 4).unwrap();
        assert_eq!(up.data, vec![0.0, 0.25, 0.75, 1.0]);
    }

    proptest! {
        #[test]
        fn semantic_maps_are_distributions(
            data in prop::collection::vec(-2.0f64..2.0, 3 * 4 * 4),
            w in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let f = FeatureMap::new(3, 4, 4, data).unwrap();
            let s = semantic_map(&f, &row(&w), 0, (16, 16)).unwrap();
            prop_assert!(s.data().iter().all(|&v| v >= 0.0));
            prop_assert!((s.map.sum() - 1.0).abs() < 1e-6);
        }

        #[test]
        fn positive_scaling_commutes(
            data in prop::collection::vec(-2.0f64..2.0, 2 * 3 * 3),
            w in prop::collection::vec(-1.0f64..1.0, 2),
            alpha in 0.01f64..100.0,
        ) {
            let f = FeatureMap::new(2, 3, 3, data).unwrap();
            let scaled: Vec<f64> = w.iter().map(|x| x * alpha).collect();
            let a = raw_cam(&f, &row(&w), 0, (6, 6)).unwrap();
            let b = raw_cam(&f, &row(&scaled), 0, (6, 6)).unwrap();
            for (x, y) in a.data.iter().zip(&b.data) {
                prop_assert!((x * alpha - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
            if a.sum() >= DEGENERATE_MASS && b.sum() >= DEGENERATE_MASS {
                let na = normalize(&a).unwrap();
                let nb = normalize(&b).unwrap();
                for (x, y) in na.data().iter().zip(nb.data()) {
                    prop_assert!((x - y).abs() <= 1e-12);
                }
            }
        }
    }
}
