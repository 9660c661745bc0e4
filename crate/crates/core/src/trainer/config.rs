use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datagen::WeakAugment;
use crate::error::{PeplError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Adaptive thresholds, CAM-weighted mixing of pseudo-labeled pairs.
    Pepl,
    /// Labeled data only.
    SupervisedOnly,
    /// Fixed-threshold pseudo-labels on unmixed unlabeled images.
    PseudoLabelFixed,
    /// Like `Pepl`, but mixed labels are weighted by mask area.
    AreaMix,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pepl, Method::SupervisedOnly, Method::PseudoLabelFixed, Method::AreaMix];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Pepl => "pepl",
            Method::SupervisedOnly => "supervised_only",
            Method::PseudoLabelFixed => "pseudo_label_fixed",
            Method::AreaMix => "area_mix",
        }
    }

    pub fn uses_unlabeled(&self) -> bool {
        !matches!(self, Method::SupervisedOnly)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Method {
    type Err = PeplError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| PeplError::invalid(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Dataset directory; `None` falls back to the caller's default.
    pub dir: Option<PathBuf>,
    pub label_fraction: f64,
    pub test_fraction: f64,
    pub split_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dir: None,
            label_fraction: 0.1,
            test_fraction: 0.2,
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Labeled batch size B.
    pub batch_size: usize,
    /// Unlabeled batch multiplier μ (unlabeled batch is μB).
    pub mu: usize,
    /// EMA momentum of the threshold statistics.
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub epochs: usize,
    /// 0 derives the epoch length from the split sizes.
    pub steps_per_epoch: usize,
    pub momentum: f32,
    pub weight_decay: f32,
    /// Confidence cut for the fixed-threshold baseline.
    pub fixed_threshold: f64,
    pub augment: WeakAugment,
    /// Evaluate on the test split every this many epochs (0 disables).
    pub eval_every: usize,
    /// Leading epochs trained on labeled data only; thresholds still track
    /// the unlabeled predictions.
    pub warmup_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 8,
            mu: 7,
            beta: 0.999,
            gamma: 1.0,
            lambda: 1.0,
            epochs: 60,
            steps_per_epoch: 0,
            momentum: 0.9,
            weight_decay: 0.0,
            fixed_threshold: 0.95,
            augment: WeakAugment::default(),
            eval_every: 1,
            warmup_epochs: 12,
        }
    }
}

/// Learning-rate schedule knobs; the desk defaults are the 200/80/40-epoch
/// shape scaled by 0.3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub initial_lr: f64,
    pub step_period: usize,
    pub decay: f64,
    pub cosine_tail: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            initial_lr: 0.03,
            step_period: 24,
            decay: 0.1,
            cosine_tail: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub widths: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { widths: vec![16, 32, 64] }
    }
}

/// Everything needed to reproduce one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    /// Seeds model init, data order, augmentation and mixing.
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub schedule: ScheduleConfig,
    pub model: ModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Pepl,
            seed: 1,
            output_dir: None,
            data: DataConfig::default(),
            train: TrainConfig::default(),
            schedule: ScheduleConfig::default(),
            model: ModelConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.train;
        let s = &self.schedule;
        let checks: [(bool, &str); 11] = [
            (t.batch_size >= 1, "batch_size must be at least 1"),
            (t.mu >= 1, "mu must be at least 1"),
            ((0.0..1.0).contains(&t.beta), "beta must lie in [0, 1)"),
            (t.gamma >= 0.0 && t.lambda >= 0.0, "loss weights must be nonnegative"),
            (t.epochs >= 1, "epochs must be at least 1"),
            (s.initial_lr > 0.0, "initial_lr must be positive"),
            (s.decay > 0.0 && s.decay <= 1.0, "decay must lie in (0, 1]"),
            (s.step_period >= 1, "step_period must be at least 1"),
            (s.cosine_tail <= t.epochs, "cosine_tail cannot exceed epochs"),
            (t.warmup_epochs < t.epochs, "warmup_epochs must be less than epochs"),
            ((0.0..=1.0).contains(&t.fixed_threshold), "fixed_threshold must lie in [0, 1]"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(PeplError::invalid(msg));
            }
        }
        if !(self.data.label_fraction > 0.0 && self.data.label_fraction <= 1.0) {
            return Err(PeplError::invalid("label_fraction must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| PeplError::Format {
            what: "run config",
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("run config is always representable as TOML")
    }

    /// Sets one dotted `section.key = value` entry, parsing `value` as a TOML
    /// value (bare words are taken as strings).
    pub fn set_override(&mut self, key: &str, value: &str) -> Result<()> {
        let mut doc = toml::Value::try_from(&*self).expect("serializable");
        let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        let mut parts = key.split('.').peekable();
        let mut node = &mut doc;
        while let Some(part) = parts.next() {
            let table = node.as_table_mut().ok_or_else(|| PeplError::invalid(format!("'{key}' is not a table path")))?;
            if parts.peek().is_none() {
                table.insert(part.to_string(), parsed);
                break;
            }
            node = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
        let updated: RunConfig = doc.try_into().map_err(|e: toml::de::Error| PeplError::Format {
            what: "config override",
            reason: format!("{key}: {e}"),
        })?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }
}
