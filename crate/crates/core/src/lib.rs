//! Semi-supervised fine-grained image classification with self-adaptive
//! pseudo-label thresholds and CAM-weighted semantic mixing.

pub mod cam;
pub mod datagen;
pub mod error;
pub mod image;
pub mod mixer;
pub mod model;
pub mod objectives;
pub mod store;
pub mod threshold;
pub mod trainer;
pub mod viz;

pub use error::{PeplError, Result};
