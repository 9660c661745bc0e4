//! On-disk dataset container.
//!
//! A dataset directory holds `manifest.json` (spec, labels, marker boxes,
//! class names, split) and `images.bin`, the 8-bit CHW pixels of every image
//! back to back in id order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, PixelBox, Split, SplitSpec, SyntheticSpec};
use crate::error::{PeplError, Result};
use crate::image::Image;

pub const MANIFEST: &str = "manifest.json";
pub const IMAGES: &str = "images.bin";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub labeled: usize,
    pub unlabeled: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub spec: SyntheticSpec,
    pub num_images: usize,
    /// `(channels, height, width)`.
    pub image_shape: (usize, usize, usize),
    pub class_names: Vec<String>,
    pub labels: Vec<usize>,
    pub marker_boxes: Vec<PixelBox>,
    pub split_spec: SplitSpec,
    pub counts: SplitCounts,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredDataset {
    pub dataset: Dataset,
    pub split_spec: SplitSpec,
    pub split: Split,
}

impl StoredDataset {
    pub fn manifest(&self) -> Manifest {
        let d = &self.dataset;
        let shape = d.images.first().map_or((3, d.spec.height, d.spec.width), Image::shape);
        Manifest {
            format_version: FORMAT_VERSION,
            spec: d.spec.clone(),
            num_images: d.len(),
            image_shape: shape,
            class_names: d.class_names.clone(),
            labels: d.labels.clone(),
            marker_boxes: d.marker_boxes.clone(),
            split_spec: self.split_spec.clone(),
            counts: SplitCounts {
                labeled: self.split.labeled.len(),
                unlabeled: self.split.unlabeled.len(),
                test: self.split.test.len(),
            },
            split: self.split.clone(),
        }
    }

    /// Writes the container. An existing non-empty `dir` is an error unless
    /// `force` is set, in which case the two container files are replaced.
    pub fn save(&self, dir: &Path, force: bool) -> Result<()> {
        if !force && dir.is_dir() && fs::read_dir(dir).map_err(|e| PeplError::io(dir, e))?.next().is_some() {
            return Err(PeplError::invalid(format!(
                "output directory {} is not empty (use --force to overwrite)",
                dir.display()
            )));
        }
        fs::create_dir_all(dir).map_err(|e| PeplError::io(dir, e))?;
        let mut pixels = Vec::new();
        for img in &self.dataset.images {
            pixels.extend(img.to_u8());
        }
        let images = dir.join(IMAGES);
        fs::write(&images, pixels).map_err(|e| PeplError::io(&images, e))?;
        let manifest = dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&self.manifest())?;
        text.push('\n');
        fs::write(&manifest, text).map_err(|e| PeplError::io(&manifest, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| PeplError::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.format_version != FORMAT_VERSION {
            return Err(format_err(format!("unsupported format version {}", m.format_version)));
        }
        let n = m.num_images;
        if m.labels.len() != n || m.marker_boxes.len() != n {
            return Err(format_err("label or marker-box count disagrees with num_images"));
        }
        if let Some(&bad) = m.labels.iter().find(|&&l| l >= m.spec.num_classes) {
            return Err(format_err(format!("label {bad} out of range")));
        }
        let ids = m.split.labeled.iter().chain(&m.split.unlabeled).chain(&m.split.test);
        if let Some(&bad) = ids.clone().find(|&&i| i >= n) {
            return Err(format_err(format!("split references image {bad} of {n}")));
        }
        let mut seen = vec![false; n];
        for &i in ids {
            if std::mem::replace(&mut seen[i], true) {
                return Err(format_err(format!("image {i} appears in two partitions")));
            }
        }
        let (c, h, w) = m.image_shape;
        let path = dir.join(IMAGES);
        let bytes = fs::read(&path).map_err(|e| PeplError::io(&path, e))?;
        let per = c * h * w;
        if bytes.len() != n * per {
            return Err(format_err(format!("{IMAGES} has {} bytes, expected {}", bytes.len(), n * per)));
        }
        let images = bytes
            .chunks_exact(per.max(1))
            .take(n)
            .map(|b| Image::from_u8(c, h, w, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dataset: Dataset {
                spec: m.spec,
                images,
                labels: m.labels,
                marker_boxes: m.marker_boxes,
                class_names: m.class_names,
            },
            split_spec: m.split_spec,
            split: m.split,
        })
    }
}

fn format_err(reason: impl Into<String>) -> PeplError {
    PeplError::Format {
        what: "dataset container",
        reason: reason.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, split};

    fn stored() -> StoredDataset {
        let spec = SyntheticSpec {
            num_classes: 4,
            per_class: 5,
            num_families: 2,
            ..SyntheticSpec::default()
        };
        let dataset = generate(&spec).unwrap();
        let split_spec = SplitSpec {
            label_fraction: 0.5,
            ..SplitSpec::default()
        };
        let split = split(&dataset.labels, 4, &split_spec).unwrap();
        StoredDataset {
            dataset,
            split_spec,
            split,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let s = stored();
        s.save(dir.path(), false).unwrap();
        assert_eq!(StoredDataset::load(dir.path()).unwrap(), s);
    }

    #[test]
    fn refuses_non_empty_dir_without_force() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("other"), b"x").unwrap();
        let s = stored();
        assert!(s.save(dir.path(), false).is_err());
        s.save(dir.path(), true).unwrap();
    }

    #[test]
    fn rejects_truncated_pixels() {
        let dir = tempfile::tempdir().unwrap();
        stored().save(dir.path(), false).unwrap();
        let p = dir.path().join(IMAGES);
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, bytes).unwrap();
        assert!(matches!(StoredDataset::load(dir.path()), Err(PeplError::Format { .. })));
    }
}
