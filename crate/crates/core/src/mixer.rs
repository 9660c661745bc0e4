//! Region mixing of pseudo-labeled pairs with semantic proportions.
//!
//! A rectangle is cut from image `a` and replaced by the same rectangle of
//! image `b`. The hybrid label weights `a`'s pseudo-label by the semantic
//! mass of `a` that survives outside the rectangle and `b`'s pseudo-label by
//! the mass of `b` that lands inside it.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cam::SemanticMap;
use crate::error::{PeplError, Result};
use crate::image::Image;
use crate::threshold::PseudoLabelSelection;

/// Binary mix region; `true` marks pixels taken from the donor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixMask {
    pub height: usize,
    pub width: usize,
    pub bits: Vec<bool>,
    pub area_fraction: f64,
}

impl MixMask {
    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 || bits.len() != height * width {
            return Err(PeplError::shape(
                format!("{height}x{width} mask"),
                format!("{} bits", bits.len()),
            ));
        }
        let ones = bits.iter().filter(|&&b| b).count();
        Ok(Self {
            height,
            width,
            area_fraction: ones as f64 / (height * width) as f64,
            bits,
        })
    }

    /// Rectangle covering rows `y0..y1` and columns `x0..x1` (clipped).
    pub fn rect(height: usize, width: usize, y0: usize, x0: usize, y1: usize, x1: usize) -> Result<Self> {
        let (y1, x1) = (y1.min(height), x1.min(width));
        let mut bits = vec![false; height * width];
        for y in y0..y1 {
            for x in x0..x1 {
                bits[y * width + x] = true;
            }
        }
        Self::from_bits(height, width, bits)
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self::rect(height, width, 0, 0, 0, 0).expect("non-empty dimensions")
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self::rect(height, width, 0, 0, height, width).expect("non-empty dimensions")
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| !b)
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    pub fn size(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Mass of `map` under the mask.
    pub fn covered_mass(&self, map: &SemanticMap) -> Result<f64> {
        if map.size() != self.size() {
            return Err(PeplError::shape(
                format!("{}x{} map", self.height, self.width),
                format!("{}x{}", map.size().0, map.size().1),
            ));
        }
        Ok(self
            .bits
            .iter()
            .zip(map.data())
            .filter(|(b, _)| **b)
            .map(|(_, v)| v)
            .sum())
    }
}

/// Builds the mix rectangle for a given area draw `lambda` and two uniform
/// position draws in `[0, 1)`. Each side is `round(side · √λ)`; the rectangle
/// is placed uniformly among positions where it fits entirely.
pub fn mask_from_draw(height: usize, width: usize, lambda: f64, pos_y: f64, pos_x: f64) -> MixMask {
    let ratio = lambda.clamp(0.0, 1.0).sqrt();
    let cut_h = ((height as f64 * ratio).round() as usize).min(height);
    let cut_w = ((width as f64 * ratio).round() as usize).min(width);
    if cut_h == 0 || cut_w == 0 {
        return MixMask::empty(height, width);
    }
    let place = |u: f64, free: usize| ((u.clamp(0.0, 1.0) * (free + 1) as f64) as usize).min(free);
    let y0 = place(pos_y, height - cut_h);
    let x0 = place(pos_x, width - cut_w);
    MixMask::rect(height, width, y0, x0, y0 + cut_h, x0 + cut_w).expect("non-empty dimensions")
}

/// Samples `λ ~ U(0, 1)` and a uniformly placed rectangle of area ≈ λ.
pub fn sample_mask<R: Rng + ?Sized>(height: usize, width: usize, rng: &mut R) -> MixMask {
    let lambda: f64 = rng.gen();
    let pos_y: f64 = rng.gen();
    let pos_x: f64 = rng.gen();
    mask_from_draw(height, width, lambda, pos_y, pos_x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridLabel {
    pub class_a: usize,
    pub rho_a: f64,
    pub class_b: usize,
    pub rho_b: f64,
}

impl HybridLabel {
    /// Area-proportion label used by the ablation baseline.
    pub fn by_area(class_a: usize, class_b: usize, mask: &MixMask) -> Self {
        Self {
            class_a,
            rho_a: 1.0 - mask.area_fraction,
            class_b,
            rho_b: mask.area_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixRecipe {
    pub index_a: usize,
    pub index_b: usize,
    pub mask: MixMask,
    pub mixed_image: Image,
    pub label: HybridLabel,
}

/// `(ρ_a, ρ_b)`: the share of `a`'s semantic mass left outside the mask and
/// the share of `b`'s mass inside it, clamped into `[0, 1]`.
pub fn semantic_proportions(map_a: &SemanticMap, map_b: &SemanticMap, mask: &MixMask) -> Result<(f64, f64)> {
    let removed = mask.covered_mass(map_a)?;
    let pasted = mask.covered_mass(map_b)?;
    // Degenerate masks are decided by the unit-mass invariant, not by rounding.
    if mask.is_empty() {
        return Ok((1.0, 0.0));
    }
    if mask.is_full() {
        return Ok((0.0, 1.0));
    }
    Ok(((1.0 - removed).clamp(0.0, 1.0), pasted.clamp(0.0, 1.0)))
}

/// Pastes the masked region of `b` into `a`.
pub fn compose(image_a: &Image, image_b: &Image, mask: &MixMask) -> Result<Image> {
    if image_a.shape() != image_b.shape() {
        return Err(PeplError::shape(
            format!("{:?}", image_a.shape()),
            format!("{:?}", image_b.shape()),
        ));
    }
    if (image_a.height, image_a.width) != mask.size() {
        return Err(PeplError::shape(
            format!("{}x{} mask", image_a.height, image_a.width),
            format!("{}x{}", mask.height, mask.width),
        ));
    }
    let plane = mask.height * mask.width;
    let mut out = image_a.clone();
    for c in 0..image_a.channels {
        let base = c * plane;
        for (i, &take) in mask.bits.iter().enumerate() {
            if take {
                out.data[base + i] = image_b.data[base + i];
            }
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn mix_pair(
    image_a: &Image,
    image_b: &Image,
    map_a: &SemanticMap,
    map_b: &SemanticMap,
    label_a: usize,
    label_b: usize,
    mask: MixMask,
) -> Result<MixRecipe> {
    let mixed_image = compose(image_a, image_b, &mask)?;
    let (rho_a, rho_b) = semantic_proportions(map_a, map_b, &mask)?;
    Ok(MixRecipe {
        index_a: 0,
        index_b: 0,
        mask,
        mixed_image,
        label: HybridLabel {
            class_a: label_a,
            rho_a,
            class_b: label_b,
            rho_b,
        },
    })
}

/// Random disjoint pairs of selected batch indices; an odd leftover is dropped.
pub fn pair_batch<R: Rng + ?Sized>(selection: &PseudoLabelSelection, rng: &mut R) -> Vec<(usize, usize)> {
    if selection.len() < 2 {
        return Vec::new();
    }
    let mut order = selection.selected_indices.clone();
    order.shuffle(rng);
    order.chunks_exact(2).map(|p| (p[0], p[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cam::Grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn map(h: usize, w: usize, data: Vec<f64>) -> SemanticMap {
        SemanticMap {
            map: Grid::new(h, w, data).unwrap(),
            image_id: 0,
            class_id: 0,
        }
    }

    fn selection(indices: &[usize]) -> PseudoLabelSelection {
        PseudoLabelSelection {
            selected_indices: indices.to_vec(),
            labels: vec![0; indices.len()],
            confidences: vec![1.0; indices.len()],
        }
    }

    #[test]
    fn degenerate_draws() {
        let m = mask_from_draw(8, 8, 0.0, 0.3, 0.9);
        assert!(m.is_empty());
        assert_eq!(m.area_fraction, 0.0);
        let m = mask_from_draw(8, 8, 1.0, 0.3, 0.9);
        assert!(m.is_full());
        assert_eq!(m.area_fraction, 1.0);
    }

    #[test]
    fn drawn_rectangle_fits_and_reports_exact_area() {
        let m = mask_from_draw(32, 32, 0.25, 0.999, 0.0);
        assert_eq!(m.area_fraction, 256.0 / 1024.0);
        assert!(m.bits[31 * 32]);
        assert!(!m.bits[31 * 32 + 16]);
    }

    #[test]
    fn mean_area_is_about_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mean: f64 = (0..n).map(|_| sample_mask(32, 32, &mut rng).area_fraction).sum::<f64>() / n as f64;
        assert!((0.47..=0.53).contains(&mean), "mean area {mean}");
    }

    #[test]
    fn proportions_by_hand() {
        let a = map(2, 2, vec![0.7, 0.1, 0.1, 0.1]);
        let b = SemanticMap::uniform(2, 2);
        let corner = MixMask::rect(2, 2, 0, 0, 1, 1).unwrap();
        let (ra, rb) = semantic_proportions(&a, &b, &corner).unwrap();
        assert_abs_diff_eq!(ra, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(rb, 0.25, epsilon = 1e-12);

        assert_eq!(semantic_proportions(&a, &b, &MixMask::empty(2, 2)).unwrap(), (1.0, 0.0));
        assert_eq!(semantic_proportions(&a, &b, &MixMask::full(2, 2)).unwrap(), (0.0, 1.0));
        assert!(semantic_proportions(&a, &SemanticMap::uniform(3, 2), &corner).is_err());
    }

    #[test]
    fn mix_pair_degenerate_masks() {
        let ia = Image::filled(3, 4, 4, 0.2);
        let ib = Image::filled(3, 4, 4, 0.9);
        let u = SemanticMap::uniform(4, 4);
        let r = mix_pair(&ia, &ib, &u, &u, 3, 5, MixMask::empty(4, 4)).unwrap();
        assert_eq!(r.mixed_image, ia);
        assert_eq!((r.label.class_a, r.label.rho_a, r.label.class_b, r.label.rho_b), (3, 1.0, 5, 0.0));
        let r = mix_pair(&ia, &ib, &u, &u, 3, 5, MixMask::full(4, 4)).unwrap();
        assert_eq!(r.mixed_image, ib);
        assert_eq!((r.label.rho_a, r.label.rho_b), (0.0, 1.0));
    }

    #[test]
    fn checkerboard_composition() {
        let ia = Image::filled(2, 4, 6, 0.25);
        let ib = Image::filled(2, 4, 6, 0.75);
        let bits: Vec<bool> = (0..24).map(|i| (i / 6 + i % 6) % 2 == 0).collect();
        let mask = MixMask::from_bits(4, 6, bits.clone()).unwrap();
        assert_eq!(mask.area_fraction, 0.5);
        let mixed = compose(&ia, &ib, &mask).unwrap();
        for c in 0..2 {
            for (i, &take) in bits.iter().enumerate() {
                let want = if take { 0.75 } else { 0.25 };
                assert_eq!(mixed.data[c * 24 + i], want);
            }
        }
        assert!(compose(&ia, &Image::filled(1, 4, 6, 0.0), &mask).is_err());
    }

    #[test]
    fn pairing_small_and_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(pair_batch(&selection(&[]), &mut rng).is_empty());
        assert!(pair_batch(&selection(&[4]), &mut rng).is_empty());
        let pairs = pair_batch(&selection(&[1, 3, 5, 7]), &mut rng);
        assert_eq!(pairs.len(), 2);
        let mut seen: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        seen.sort();
        assert_eq!(seen, vec![1, 3, 5, 7]);
    }

    #[test]
    fn pairing_odd_drops_one() {
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs = pair_batch(&selection(&[0, 2, 4, 6, 8]), &mut rng);
            assert_eq!(pairs.len(), 2);
            let mut seen: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), 4);
            assert!(seen.iter().all(|i| [0, 2, 4, 6, 8].contains(i)));
        }
    }

    fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>() + 1e-9;
            v.iter().map(|x| (x + 1e-9 / v.len() as f64) / s).collect()
        })
    }

    proptest! {
        #[test]
        fn proportions_are_bounded_and_monotone(
            a in distribution(36),
            b in distribution(36),
            (y0, x0, y1, x1) in (0usize..6, 0usize..6, 0usize..7, 0usize..7),
            grow in 0usize..3,
        ) {
            let (ma, mb) = (map(6, 6, a), map(6, 6, b));
            let small = MixMask::rect(6, 6, y0, x0, y1, x1).unwrap();
            let large = MixMask::rect(6, 6, y0.saturating_sub(grow), x0.saturating_sub(grow), y1 + grow, x1 + grow).unwrap();
            let (ra, rb) = semantic_proportions(&ma, &mb, &small).unwrap();
            let (la, lb) = semantic_proportions(&ma, &mb, &large).unwrap();
            prop_assert!((0.0..=1.0).contains(&ra) && (0.0..=1.0).contains(&rb));
            prop_assert!(la <= ra + 1e-12 && lb >= rb - 1e-12);
            if !small.is_empty() && !small.is_full() {
                prop_assert!((ra + small.covered_mass(&ma).unwrap() - 1.0).abs() <= 1e-12);
            }
            let u = SemanticMap::uniform(6, 6);
            let (ua, ub) = semantic_proportions(&u, &u, &small).unwrap();
            prop_assert!((ua - (1.0 - small.area_fraction)).abs() <= 1e-9);
            prop_assert!((ub - small.area_fraction).abs() <= 1e-9);
        }
    }
}
