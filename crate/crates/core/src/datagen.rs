//! Procedural fine-grained image dataset.
//!
//! Every class belongs to a coarse shape family. Classes within a family share
//! the same large shape and background statistics and differ only by a small
//! marker (its pattern and the quadrant of the shape it sits in). The marker
//! bounding box is recorded per image so CAM localization can be measured.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{PeplError, Result};
use crate::image::Image;

pub const MAX_FAMILIES: usize = 6;
/// Largest allowed marker box as a fraction of the image area.
pub const MAX_MARKER_AREA: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub per_class: usize,
    pub height: usize,
    pub width: usize,
    pub num_families: usize,
    /// Marker side length range in pixels, inclusive.
    pub marker_min: usize,
    pub marker_max: usize,
    /// Std-dev of per-pixel Gaussian noise on the `[0, 1]` scale.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_classes: 10,
            per_class: 100,
            height: 32,
            width: 32,
            num_families: 5,
            marker_min: 4,
            marker_max: 6,
            noise: 0.06,
            seed: 7,
        }
    }
}

/// Identity of a class: which shape, which marker pattern, which quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecipe {
    pub family: usize,
    pub marker_type: usize,
    pub zone: usize,
}

/// Half-open pixel box `[y0, y1) × [x0, x1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub y0: usize,
    pub x0: usize,
    pub y1: usize,
    pub x1: usize,
}

impl PixelBox {
    pub fn area(&self) -> usize {
        (self.y1 - self.y0) * (self.x1 - self.x0)
    }

    pub fn contains(&self, y: usize, x: usize) -> bool {
        (self.y0..self.y1).contains(&y) && (self.x0..self.x1).contains(&x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: SyntheticSpec,
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub marker_boxes: Vec<PixelBox>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.spec.num_classes
    }

    pub fn gather(&self, ids: &[usize]) -> (Vec<Image>, Vec<usize>) {
        (
            ids.iter().map(|&i| self.images[i].clone()).collect(),
            ids.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

const FAMILY_NAMES: [&str; MAX_FAMILIES] = ["disc", "square", "triangle", "diamond", "ring", "cross"];
const MARKER_NAMES: [&str; 4] = ["dot", "hollow", "bar", "checker"];
const ZONE_NAMES: [&str; 4] = ["upper-left", "upper-right", "lower-left", "lower-right"];

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(PeplError::invalid("need at least 2 classes"));
        }
        if self.num_families == 0 || self.num_families > MAX_FAMILIES {
            return Err(PeplError::invalid(format!(
                "num_families must be in 1..={MAX_FAMILIES}, got {}",
                self.num_families
            )));
        }
        if self.num_classes.div_ceil(self.num_families) > MARKER_NAMES.len() * ZONE_NAMES.len() {
            return Err(PeplError::invalid("too many classes per family for the marker catalogue"));
        }
        if self.per_class == 0 || self.height < 8 || self.width < 8 {
            return Err(PeplError::invalid("need at least one image per class and 8x8 images"));
        }
        if self.marker_min == 0 || self.marker_min > self.marker_max {
            return Err(PeplError::invalid("marker size range is empty"));
        }
        if self.marker_max > self.height || self.marker_max > self.width {
            return Err(PeplError::invalid(format!(
                "marker size {} exceeds image size {}x{}",
                self.marker_max, self.height, self.width
            )));
        }
        if (self.marker_max * self.marker_max) as f64 > MAX_MARKER_AREA * (self.height * self.width) as f64 {
            return Err(PeplError::invalid(format!(
                "marker size {} covers more than {}% of the image",
                self.marker_max,
                MAX_MARKER_AREA * 100.0
            )));
        }
        if !(self.noise >= 0.0) {
            return Err(PeplError::invalid("noise level must be nonnegative"));
        }
        Ok(())
    }

    /// Classes are dealt round-robin over families; the k-th class of a
    /// family gets marker pattern `k mod 4` and a quadrant shifted by family.
    pub fn recipe(&self, class: usize) -> ClassRecipe {
        let family = class % self.num_families;
        let k = class / self.num_families;
        ClassRecipe {
            family,
            marker_type: k % MARKER_NAMES.len(),
            zone: (family + k) % ZONE_NAMES.len(),
        }
    }

    pub fn class_name(&self, class: usize) -> String {
        let r = self.recipe(class);
        format!(
            "{}-{}-{}",
            FAMILY_NAMES[r.family], MARKER_NAMES[r.marker_type], ZONE_NAMES[r.zone]
        )
    }
}

fn inside_shape(family: usize, dy: f64, dx: f64, r: f64) -> bool {
    let dist = (dy * dy + dx * dx).sqrt();
    match family {
        0 => dist <= r,
        1 => dy.abs().max(dx.abs()) <= 0.8 * r,
        2 => {
            // upward triangle with base at +0.7r
            let t = (dy + r) / (1.7 * r);
            (0.0..=1.0).contains(&t) && dx.abs() <= t * r
        }
        3 => dy.abs() + dx.abs() <= 1.1 * r,
        4 => (0.55 * r..=r).contains(&dist),
        _ => (dy.abs() <= 0.35 * r && dx.abs() <= r) || (dx.abs() <= 0.35 * r && dy.abs() <= r),
    }
}

/// Marker pattern value at `(u, v)` within an `s × s` patch: `Some(true)` for
/// ink, `Some(false)` for the patch's contrasting fill, `None` for transparent.
fn marker_pixel(marker_type: usize, u: usize, v: usize, s: usize) -> Option<bool> {
    let edge = u == 0 || v == 0 || u + 1 == s || v + 1 == s;
    match marker_type {
        0 => Some(true),
        1 => Some(edge),
        2 => Some(u.is_multiple_of(2)),
        _ => Some((u + v).is_multiple_of(2)),
    }
}

fn render(spec: &SyntheticSpec, class: usize, rng: &mut ChaCha8Rng) -> (Image, PixelBox) {
    let (h, w) = (spec.height, spec.width);
    let recipe = spec.recipe(class);
    let mut img = Image::filled(3, h, w, 0.0);

    let base: [f64; 3] = [rng.gen_range(0.05..0.4), rng.gen_range(0.05..0.4), rng.gen_range(0.05..0.4)];
    let grad_angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let grad_amp: f64 = rng.gen_range(0.0..0.15);
    let (gy, gx) = (grad_angle.sin() * grad_amp, grad_angle.cos() * grad_amp);

    let scale = h.min(w) as f64 / 32.0;
    let r = rng.gen_range(9.0..12.0) * scale;
    let cy = h as f64 / 2.0 + rng.gen_range(-3.0..3.0) * scale;
    let cx = w as f64 / 2.0 + rng.gen_range(-3.0..3.0) * scale;
    let shape_color: [f64; 3] = [rng.gen_range(0.45..0.8), rng.gen_range(0.45..0.8), rng.gen_range(0.45..0.8)];

    for y in 0..h {
        for x in 0..w {
            let (fy, fx) = (y as f64 + 0.5, x as f64 + 0.5);
            let ramp = gy * (fy / h as f64 - 0.5) + gx * (fx / w as f64 - 0.5);
            let on = inside_shape(recipe.family, fy - cy, fx - cx, r);
            for c in 0..3 {
                let v = if on { shape_color[c] } else { base[c] + ramp };
                img.set(c, y, x, v as f32);
            }
        }
    }

    let s = rng.gen_range(spec.marker_min..=spec.marker_max);
    let (sy, sx) = match recipe.zone {
        0 => (-1.0, -1.0),
        1 => (-1.0, 1.0),
        2 => (1.0, -1.0),
        _ => (1.0, 1.0),
    };
    let off = 0.45 * r;
    let my = cy + sy * off + rng.gen_range(-1.0..1.0) - s as f64 / 2.0;
    let mx = cx + sx * off + rng.gen_range(-1.0..1.0) - s as f64 / 2.0;
    let y0 = (my.round().max(0.0) as usize).min(h - s);
    let x0 = (mx.round().max(0.0) as usize).min(w - s);
    let ink: [f32; 3] = [0.95, 0.1, 0.1];
    let fill: [f32; 3] = [0.05, 0.05, 0.05];
    for u in 0..s {
        for v in 0..s {
            if let Some(on) = marker_pixel(recipe.marker_type, u, v, s) {
                let col = if on { ink } else { fill };
                for (c, &val) in col.iter().enumerate() {
                    img.set(c, y0 + u, x0 + v, val);
                }
            }
        }
    }

    if spec.noise > 0.0 {
        let normal = Normal::new(0.0, spec.noise).expect("nonnegative noise");
        for v in &mut img.data {
            *v += normal.sample(rng) as f32;
        }
    }
    // quantize so the stored 8-bit container round-trips exactly
    let bytes = img.to_u8();
    let img = Image::from_u8(3, h, w, &bytes).expect("same shape");
    (
        img,
        PixelBox {
            y0,
            x0,
            y1: y0 + s,
            x1: x0 + s,
        },
    )
}

/// Deterministic for a fixed spec; images are ordered class-major.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.num_classes * spec.per_class;
    let mut images = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut marker_boxes = Vec::with_capacity(total);
    for class in 0..spec.num_classes {
        for _ in 0..spec.per_class {
            let (img, bx) = render(spec, class, &mut rng);
            images.push(img);
            labels.push(class);
            marker_boxes.push(bx);
        }
    }
    Ok(Dataset {
        spec: spec.clone(),
        class_names: (0..spec.num_classes).map(|c| spec.class_name(c)).collect(),
        images,
        labels,
        marker_boxes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub label_fraction: f64,
    pub test_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            label_fraction: 0.1,
            test_fraction: 0.2,
            stratified: true,
            seed: 0,
        }
    }
}

/// Image ids of each partition, ascending.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified partition into labeled / unlabeled / test.
///
/// The test set depends only on `(test_fraction, seed)`, so splits with
/// different label fractions share the same test images.
pub fn split(labels: &[usize], num_classes: usize, spec: &SplitSpec) -> Result<Split> {
    if !(spec.label_fraction > 0.0 && spec.label_fraction <= 1.0) {
        return Err(PeplError::invalid(format!(
            "label fraction must lie in (0, 1], got {}",
            spec.label_fraction
        )));
    }
    if !(0.0..1.0).contains(&spec.test_fraction) {
        return Err(PeplError::invalid(format!(
            "test fraction must lie in [0, 1), got {}",
            spec.test_fraction
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(PeplError::ClassOutOfRange {
            class: bad,
            num_classes,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut out = Split::default();
    let mut train_by_class = Vec::with_capacity(num_classes);
    for ids in &mut by_class {
        ids.shuffle(&mut rng);
        let n_test = (ids.len() as f64 * spec.test_fraction).round() as usize;
        out.test.extend_from_slice(&ids[..n_test]);
        train_by_class.push(ids[n_test..].to_vec());
    }
    let n_train: usize = train_by_class.iter().map(Vec::len).sum();
    let n_labeled = ((n_train as f64 * spec.label_fraction).round() as usize).clamp(1, n_train);

    if spec.stratified {
        let mut quota = vec![n_labeled / num_classes; num_classes];
        let mut order: Vec<usize> = (0..num_classes).collect();
        order.shuffle(&mut rng);
        for &c in order.iter().take(n_labeled % num_classes) {
            quota[c] += 1;
        }
        for (c, ids) in train_by_class.iter().enumerate() {
            if quota[c] == 0 && !ids.is_empty() {
                return Err(PeplError::invalid(format!(
                    "label fraction {} leaves class {c} without labeled samples",
                    spec.label_fraction
                )));
            }
            if quota[c] > ids.len() {
                return Err(PeplError::invalid(format!(
                    "class {c} has {} training samples but needs {} labeled",
                    ids.len(),
                    quota[c]
                )));
            }
            out.labeled.extend_from_slice(&ids[..quota[c]]);
            out.unlabeled.extend_from_slice(&ids[quota[c]..]);
        }
    } else {
        let mut pool: Vec<usize> = train_by_class.concat();
        pool.shuffle(&mut rng);
        out.labeled.extend_from_slice(&pool[..n_labeled]);
        out.unlabeled.extend_from_slice(&pool[n_labeled..]);
    }
    out.labeled.sort_unstable();
    out.unlabeled.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

/// Light augmentation: optional random horizontal flip and a translation of
/// up to `max_shift` pixels with edge replication.
///
/// Flipping is off by default because it moves markers between left and
/// right zones, and the zone is part of a synthetic class's identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakAugment {
    pub flip: bool,
    pub max_shift: i32,
}

impl Default for WeakAugment {
    fn default() -> Self {
        Self {
            flip: false,
            max_shift: 2,
        }
    }
}

impl WeakAugment {
    pub fn apply<R: Rng + ?Sized>(&self, image: &Image, rng: &mut R) -> Image {
        let flipped = self.flip && rng.gen_bool(0.5);
        let (dy, dx) = if self.max_shift > 0 {
            (
                rng.gen_range(-self.max_shift..=self.max_shift),
                rng.gen_range(-self.max_shift..=self.max_shift),
            )
        } else {
            (0, 0)
        };
        let base = if flipped { image.flip_horizontal() } else { image.clone() };
        if dy == 0 && dx == 0 {
            base
        } else {
            base.shift(dy, dx)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SyntheticSpec {
        SyntheticSpec {
            per_class: 10,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn counting_contract() {
        let d = generate(&SyntheticSpec::default()).unwrap();
        assert_eq!(d.len(), 1000);
        for c in 0..10 {
            assert_eq!(d.labels.iter().filter(|&&l| l == c).count(), 100);
        }
        let per_family = (0..5)
            .map(|f| d.labels.iter().filter(|&&l| d.spec.recipe(l).family == f).count())
            .collect::<Vec<_>>();
        assert_eq!(per_family, vec![200; 5]);
    }

    #[test]
    fn recipes_are_unique_and_families_share_shapes() {
        let spec = SyntheticSpec::default();
        let recipes: Vec<_> = (0..10).map(|c| spec.recipe(c)).collect();
        for i in 0..10 {
            for j in i + 1..10 {
                assert_ne!(recipes[i], recipes[j]);
                if recipes[i].family == recipes[j].family {
                    assert_ne!(recipes[i].marker_type, recipes[j].marker_type);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&small_spec()).unwrap();
        let b = generate(&small_spec()).unwrap();
        assert_eq!(a, b);
        let c = generate(&SyntheticSpec { seed: 8, ..small_spec() }).unwrap();
        assert_ne!(a.images, c.images);
    }

    #[test]
    fn markers_are_small() {
        let d = generate(&small_spec()).unwrap();
        let area = (d.spec.height * d.spec.width) as f64;
        for b in &d.marker_boxes {
            assert!(b.area() as f64 <= MAX_MARKER_AREA * area);
            assert!(b.y1 <= 32 && b.x1 <= 32);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&SyntheticSpec { marker_max: 40, ..small_spec() }).is_err());
        assert!(generate(&SyntheticSpec { marker_max: 11, ..small_spec() }).is_err());
        assert!(generate(&SyntheticSpec { num_classes: 1, ..small_spec() }).is_err());
        assert!(generate(&SyntheticSpec { num_families: 9, ..small_spec() }).is_err());
    }

    #[test]
    fn split_sizes() {
        let labels: Vec<usize> = (0..1000).map(|i| i / 100).collect();
        let s = split(&labels, 10, &SplitSpec::default()).unwrap();
        assert_eq!((s.labeled.len(), s.unlabeled.len(), s.test.len()), (80, 720, 200));
        for c in 0..10 {
            assert_eq!(s.labeled.iter().filter(|&&i| labels[i] == c).count(), 8);
        }
        let mut all: Vec<usize> = [s.labeled.clone(), s.unlabeled.clone(), s.test.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());

        let full = split(&labels, 10, &SplitSpec { label_fraction: 1.0, ..SplitSpec::default() }).unwrap();
        assert!(full.unlabeled.is_empty());
        assert_eq!(full.test, s.test);
    }

    #[test]
    fn split_stratification_bound() {
        let labels: Vec<usize> = (0..1000).map(|i| i / 100).collect();
        for frac in [0.13, 0.2, 0.3, 0.55] {
            let s = split(&labels, 10, &SplitSpec { label_fraction: frac, seed: 3, ..SplitSpec::default() }).unwrap();
            let counts: Vec<usize> = (0..10).map(|c| s.labeled.iter().filter(|&&i| labels[i] == c).count()).collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1, "{counts:?}");
            assert_eq!(s.labeled.len(), (800.0 * frac).round() as usize);
        }
    }

    #[test]
    fn split_errors() {
        let labels: Vec<usize> = (0..100).map(|i| i / 10).collect();
        assert!(split(&labels, 10, &SplitSpec { label_fraction: 0.05, ..SplitSpec::default() }).is_err());
        assert!(split(&labels, 10, &SplitSpec { label_fraction: 0.0, ..SplitSpec::default() }).is_err());
        assert!(split(&labels, 5, &SplitSpec::default()).is_err());
    }

    #[test]
    fn augmentation_preserves_shape() {
        let d = generate(&small_spec()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let aug = WeakAugment::default();
        for img in d.images.iter().take(20) {
            let out = aug.apply(img, &mut rng);
            assert_eq!(out.shape(), img.shape());
        }
        let none = WeakAugment { flip: false, max_shift: 0 };
        assert_eq!(none.apply(&d.images[0], &mut rng), d.images[0]);
    }
}
