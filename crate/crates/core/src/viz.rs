//! CAM heatmaps, PNG export, and marker localization scores.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::cam::{semantic_map, SemanticMap};
use crate::datagen::{Dataset, PixelBox};
use crate::error::{PeplError, Result};
use crate::image::Image;
use crate::model::Backbone;
use crate::threshold::argmax;

/// Blue → cyan → yellow → red ramp for `t ∈ [0, 1]`.
pub fn colormap(t: f64) -> [f32; 3] {
    const STOPS: [[f32; 3]; 4] = [[0.0, 0.0, 0.5], [0.0, 0.8, 1.0], [1.0, 0.9, 0.0], [0.9, 0.0, 0.0]];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = (t - i as f64) as f32;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    [0, 1, 2].map(|c| a[c] + f * (b[c] - a[c]))
}

/// Colors a semantic map relative to its own peak. A uniform map renders as
/// one flat color.
pub fn heatmap(map: &SemanticMap) -> Image {
    let (h, w) = map.size();
    let peak = map.map.max();
    let mut out = Image::filled(3, h, w, 0.0);
    for y in 0..h {
        for x in 0..w {
            let t = if peak > 0.0 { map.map.at(y, x) / peak } else { 0.0 };
            let rgb = colormap(t);
            for (c, v) in rgb.into_iter().enumerate() {
                out.set(c, y, x, v);
            }
        }
    }
    out
}

/// Alpha-blends the heatmap of `map` over `image`.
pub fn overlay(image: &Image, map: &SemanticMap, alpha: f32) -> Result<Image> {
    if image.channels != 3 || (image.height, image.width) != map.size() {
        return Err(PeplError::shape(
            format!("3×{}×{}", map.size().0, map.size().1),
            format!("{}×{}×{}", image.channels, image.height, image.width),
        ));
    }
    let heat = heatmap(map);
    let data = image
        .data
        .iter()
        .zip(&heat.data)
        .map(|(&p, &q)| (1.0 - alpha) * p + alpha * q)
        .collect();
    Image::new(3, image.height, image.width, data)
}

/// Places images left to right with a `gap`-pixel white separator.
pub fn side_by_side(left: &Image, right: &Image, gap: usize) -> Result<Image> {
    if left.channels != right.channels || left.height != right.height {
        return Err(PeplError::shape(
            format!("{}×{}×_", left.channels, left.height),
            format!("{}×{}×_", right.channels, right.height),
        ));
    }
    let w = left.width + gap + right.width;
    let mut out = Image::filled(left.channels, left.height, w, 1.0);
    for c in 0..left.channels {
        for y in 0..left.height {
            for x in 0..left.width {
                out.set(c, y, x, left.at(c, y, x));
            }
            for x in 0..right.width {
                out.set(c, y, left.width + gap + x, right.at(c, y, x));
            }
        }
    }
    Ok(out)
}

/// Nearest-neighbour enlargement by an integer factor.
pub fn upscale(image: &Image, factor: usize) -> Image {
    let f = factor.max(1);
    let mut out = Image::filled(image.channels, image.height * f, image.width * f, 0.0);
    for c in 0..image.channels {
        for y in 0..out.height {
            for x in 0..out.width {
                out.set(c, y, x, image.at(c, y / f, x / f));
            }
        }
    }
    out
}

/// Writes a 1- or 3-channel image as an 8-bit PNG.
pub fn write_png(path: &Path, image: &Image) -> Result<()> {
    let color = match image.channels {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        n => return Err(PeplError::invalid(format!("cannot write {n}-channel PNG"))),
    };
    let planar = image.to_u8();
    let plane = image.height * image.width;
    let mut interleaved = vec![0u8; planar.len()];
    for c in 0..image.channels {
        for i in 0..plane {
            interleaved[i * image.channels + c] = planar[c * plane + i];
        }
    }
    let file = fs::File::create(path).map_err(|e| PeplError::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), image.width as u32, image.height as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header()?;
    writer.write_image_data(&interleaved)?;
    writer.finish()?;
    Ok(())
}

/// Predicted class and its semantic map for each image.
pub fn predicted_maps<B: Backbone + ?Sized>(model: &B, images: &[Image]) -> Result<Vec<(usize, SemanticMap)>> {
    let weights = model.classifier_weights();
    let mut out = Vec::with_capacity(images.len());
    for chunk in images.chunks(64) {
        let fwd = model.forward(chunk)?;
        let logits = fwd.logits_f64();
        for (i, img) in chunk.iter().enumerate() {
            let class = argmax(&logits[i * fwd.num_classes..(i + 1) * fwd.num_classes]).0;
            let map = semantic_map(&fwd.feature_map(i), &weights, class, (img.height, img.width))?;
            out.push((class, map));
        }
    }
    Ok(out)
}

pub fn box_mass(map: &SemanticMap, bx: &PixelBox) -> f64 {
    let (_, w) = map.size();
    (bx.y0..bx.y1)
        .flat_map(|y| (bx.x0..bx.x1).map(move |x| y * w + x))
        .map(|i| map.data()[i])
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Localization {
    pub images: usize,
    /// Mean semantic mass inside the marker box.
    pub mean_box_mass: f64,
    /// Mean box area as a fraction of the image.
    pub mean_box_fraction: f64,
}

impl Localization {
    pub fn ratio(&self) -> f64 {
        self.mean_box_mass / self.mean_box_fraction
    }
}

/// Scores how much predicted-class CAM mass lands on the marker boxes of
/// the dataset images `ids`.
pub fn marker_localization<B: Backbone + ?Sized>(model: &B, dataset: &Dataset, ids: &[usize]) -> Result<Localization> {
    if ids.is_empty() {
        return Err(PeplError::invalid("no images to score"));
    }
    if let Some(&bad) = ids.iter().find(|&&i| i >= dataset.len()) {
        return Err(PeplError::UnknownImage(bad));
    }
    let (images, _) = dataset.gather(ids);
    let maps = predicted_maps(model, &images)?;
    let mut mass = 0.0;
    let mut frac = 0.0;
    for (&id, (_, map)) in ids.iter().zip(&maps) {
        let bx = &dataset.marker_boxes[id];
        let (h, w) = map.size();
        mass += box_mass(map, bx);
        frac += bx.area() as f64 / (h * w) as f64;
    }
    let n = ids.len() as f64;
    Ok(Localization {
        images: ids.len(),
        mean_box_mass: mass / n,
        mean_box_fraction: frac / n,
    })
}
