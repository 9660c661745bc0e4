//! The training loop and its baselines.
//!
//! One step of the semantic-mixing method:
//!
//! 1. draw `B` labeled and `μB` unlabeled images and weak-augment them;
//! 2. predict on the unlabeled batch, advance the threshold EMAs and select
//!    pseudo-labels with the refreshed per-class thresholds;
//! 3. build a semantic map for each selected image from the same forward
//!    pass, using its pseudo-label as the CAM class;
//! 4. pair the selected images, cut-and-paste a rectangle from `b` into `a`
//!    and label the result with the semantic proportions;
//! 5. descend on `γ·L_sup + λ·L_unsup`.
//!
//! Hidden labels of the unlabeled pool never enter [`Trainer`]; the driver in
//! [`train`] scores pseudo-label quality in a separate read-only pass.

mod ablation;
mod checkpoint;
mod config;
mod schedule;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use ablation::{run_ablation, AblationCell, AblationGrid, AblationRow, AblationTable};
pub use checkpoint::Checkpoint;
pub use config::{DataConfig, Method, ModelConfig, RunConfig, ScheduleConfig, TrainConfig};
pub use schedule::LrSchedule;

use crate::cam::semantic_map;
use crate::datagen::{split, Dataset, Split, SplitSpec};
use crate::error::{PeplError, Result};
use crate::image::Image;
use crate::mixer::{compose, mix_pair, pair_batch, sample_mask, HybridLabel};
use crate::model::{Backbone, Sgd, ToyBackbone, ToyBackboneConfig};
use crate::objectives::{total_loss_grad, LossBreakdown};
use crate::threshold::{argmax, select_with_thresholds, PredictionBatch, PseudoLabelSelection, ThresholdState};

/// Training inputs visible to the learner. The unlabeled pool carries no labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainData {
    pub labeled: Vec<Image>,
    pub labels: Vec<usize>,
    pub unlabeled: Vec<Image>,
    pub num_classes: usize,
}

/// Images with labels, for evaluation or diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
}

/// Partitions a dataset into learner inputs, hidden unlabeled truth (for
/// diagnostics only), and the test set.
pub fn partition(dataset: &Dataset, split: &Split) -> (TrainData, Vec<usize>, LabeledSet) {
    let (labeled, labels) = dataset.gather(&split.labeled);
    let (unlabeled, hidden) = dataset.gather(&split.unlabeled);
    let (test_images, test_labels) = dataset.gather(&split.test);
    (
        TrainData {
            labeled,
            labels,
            unlabeled,
            num_classes: dataset.num_classes(),
        },
        hidden,
        LabeledSet {
            images: test_images,
            labels: test_labels,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: u64,
    pub epoch: usize,
    pub lr: f64,
    pub l_sup: f64,
    pub l_unsup: f64,
    pub l_total: f64,
    pub n_unlabeled: usize,
    pub n_selected: usize,
    /// `n_selected / n_unlabeled`, 0 when no unlabeled batch was drawn.
    pub selection_rate: f64,
    pub n_mixed: usize,
    pub mean_rho_a: Option<f64>,
    pub mean_rho_b: Option<f64>,
    pub mean_area_fraction: Option<f64>,
    /// Mean `|ρ_a − (1 − f)|` over the step's mixes.
    pub mean_rho_gap: Option<f64>,
    pub tau_global: f64,
    /// Filled in by the diagnostics pass.
    pub pseudo_label_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub metrics: StepMetrics,
    /// Pool indices of the unlabeled batch, in batch order.
    pub unlabeled_ids: Vec<usize>,
    /// Model probabilities on the unlabeled batch (the EMA input).
    pub predictions: Option<PredictionBatch>,
    pub selection: Option<PseudoLabelSelection>,
    /// `(batch index a, batch index b, label)` per mixed sample.
    pub mixes: Vec<(usize, usize, HybridLabel)>,
}

#[derive(Debug, Serialize)]
struct NonFiniteDump<'a> {
    step: u64,
    labeled_ids: &'a [usize],
    unlabeled_ids: &'a [usize],
    mixes: &'a [(usize, usize, HybridLabel)],
    loss: LossBreakdown,
    lr: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Indices `start..start + count` of an endless stream that visits
/// `0..n` in a fresh seeded permutation per pass.
fn stream_indices(seed: u64, tag: u64, n: usize, start: u64, count: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut out = Vec::with_capacity(count);
    let mut cached: Option<(u64, Vec<usize>)> = None;
    for k in start..start + count as u64 {
        let pass = k / n as u64;
        if cached.as_ref().map(|(p, _)| *p) != Some(pass) {
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(tag ^ splitmix64(pass))));
            perm.shuffle(&mut rng);
            cached = Some((pass, perm));
        }
        out.push(cached.as_ref().expect("filled above").1[(k % n as u64) as usize]);
    }
    out
}

const LABELED_STREAM: u64 = 0x4C41_4245_4C45_4400;
const UNLABELED_STREAM: u64 = 0x554E_4C41_4245_4C00;

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn steps_per_epoch(config: &RunConfig, data: &TrainData) -> usize {
    if config.train.steps_per_epoch > 0 {
        return config.train.steps_per_epoch;
    }
    let b = config.train.batch_size;
    let labeled = data.labeled.len().div_ceil(b);
    let unlabeled = data.unlabeled.len().div_ceil(b * config.train.mu);
    labeled.max(unlabeled).max(1)
}

pub struct Trainer<'d> {
    config: RunConfig,
    data: &'d TrainData,
    model: ToyBackbone,
    optimizer: Sgd,
    thresholds: ThresholdState,
    rng: ChaCha8Rng,
    step: u64,
    schedule: LrSchedule,
}

impl<'d> Trainer<'d> {
    pub fn new(config: RunConfig, data: &'d TrainData) -> Result<Self> {
        config.validate()?;
        let first = data
            .labeled
            .first()
            .ok_or_else(|| PeplError::invalid("training needs at least one labeled image"))?;
        if data.labeled.len() != data.labels.len() {
            return Err(PeplError::shape(
                format!("{} labels", data.labeled.len()),
                data.labels.len().to_string(),
            ));
        }
        let backbone = ToyBackboneConfig {
            input_channels: first.channels,
            height: first.height,
            width: first.width,
            widths: config.model.widths.clone(),
            num_classes: data.num_classes,
            seed: config.seed,
        };
        let model = ToyBackbone::new(backbone)?;
        let optimizer = Sgd::new(&model, config.train.momentum, config.train.weight_decay);
        let thresholds = ThresholdState::init(data.num_classes, config.train.beta)?;
        let rng = ChaCha8Rng::seed_from_u64(splitmix64(config.seed ^ 0x5EED));
        let schedule = Self::schedule_for(&config, data);
        Ok(Self {
            config,
            data,
            model,
            optimizer,
            thresholds,
            rng,
            step: 0,
            schedule,
        })
    }

    fn schedule_for(config: &RunConfig, data: &TrainData) -> LrSchedule {
        LrSchedule {
            initial: config.schedule.initial_lr,
            step_period: config.schedule.step_period,
            decay: config.schedule.decay,
            cosine_tail: config.schedule.cosine_tail,
            total_epochs: config.train.epochs,
            steps_per_epoch: steps_per_epoch(config, data),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint, data: &'d TrainData) -> Result<Self> {
        let mut trainer = Self::new(ckpt.config.clone(), data)?;
        if trainer.model.config() != &ckpt.backbone {
            return Err(PeplError::invalid("checkpoint backbone does not match the training data"));
        }
        trainer.model.load_params(&ckpt.params)?;
        if !ckpt.velocity.is_empty() {
            if ckpt.velocity.iter().map(Vec::len).ne(trainer.optimizer.velocity.iter().map(Vec::len)) {
                return Err(PeplError::invalid("checkpoint optimizer state has the wrong shape"));
            }
            trainer.optimizer.velocity = ckpt.velocity.clone();
        }
        trainer.thresholds = ckpt.thresholds.clone();
        trainer.rng = ckpt.rng.clone();
        trainer.step = ckpt.step;
        Ok(trainer)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            backbone: self.model.config().clone(),
            step: self.step,
            thresholds: self.thresholds.clone(),
            rng: self.rng.clone(),
            params: self.model.params().iter().map(|p| p.to_vec()).collect(),
            velocity: self.optimizer.velocity.clone(),
        }
    }

    pub fn model(&self) -> &ToyBackbone {
        &self.model
    }

    pub fn thresholds(&self) -> &ThresholdState {
        &self.thresholds
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn schedule(&self) -> &LrSchedule {
        &self.schedule
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn total_steps(&self) -> u64 {
        self.schedule.total_steps() as u64
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.total_steps()
    }

    fn augment_all(&mut self, images: &[Image], ids: &[usize]) -> Vec<Image> {
        let aug = self.config.train.augment;
        ids.iter().map(|&i| aug.apply(&images[i], &mut self.rng)).collect()
    }

    fn dump_non_finite(&self, dump: &NonFiniteDump<'_>) -> Option<PathBuf> {
        let dir = self.config.output_dir.as_ref()?;
        let path = dir.join(format!("nonfinite_step{}.json", dump.step));
        fs::create_dir_all(dir).ok()?;
        fs::write(&path, serde_json::to_vec_pretty(dump).ok()?).ok()?;
        Some(path)
    }

    /// Runs one optimizer step.
    pub fn step(&mut self) -> Result<StepReport> {
        let cfg = self.config.train.clone();
        let method = self.config.method;
        let c = self.data.num_classes;
        let spe = self.schedule.steps_per_epoch;
        let epoch = self.step as usize / spe;
        let lr = self.schedule.lr_at(epoch, self.step as usize % spe);

        let b = cfg.batch_size;
        let labeled_ids = stream_indices(self.config.seed, LABELED_STREAM, self.data.labeled.len(), self.step * b as u64, b);
        let mut images = self.augment_all(&self.data.labeled, &labeled_ids);
        let labels: Vec<usize> = labeled_ids.iter().map(|&i| self.data.labels[i]).collect();
        let n_labeled = images.len();

        let mut unlabeled_ids = Vec::new();
        let mut predictions = None;
        let mut selection = None;
        let mut mixes = Vec::new();
        let mut hybrid = Vec::new();
        let mut areas = Vec::new();

        if method.uses_unlabeled() && !self.data.unlabeled.is_empty() {
            let ub = b * cfg.mu;
            unlabeled_ids = stream_indices(
                self.config.seed,
                UNLABELED_STREAM,
                self.data.unlabeled.len(),
                self.step * ub as u64,
                ub,
            );
            let weak = self.augment_all(&self.data.unlabeled, &unlabeled_ids);
            let out = self.model.forward(&weak)?;
            let probs = PredictionBatch::from_logits(&out.logits_f64(), c)?;

            let sel = match method {
                Method::PseudoLabelFixed => select_with_thresholds(&vec![cfg.fixed_threshold; c], &probs)?,
                _ => {
                    self.thresholds = self.thresholds.update(&probs)?;
                    self.thresholds.select(&probs)?
                }
            };

            let warming = epoch < cfg.warmup_epochs;
            match method {
                _ if warming => {}
                Method::PseudoLabelFixed => {
                    for (k, &i) in sel.selected_indices.iter().enumerate() {
                        images.push(weak[i].clone());
                        let y = sel.labels[k];
                        hybrid.push(HybridLabel {
                            class_a: y,
                            rho_a: 1.0,
                            class_b: y,
                            rho_b: 0.0,
                        });
                    }
                }
                Method::Pepl | Method::AreaMix => {
                    let pairs = pair_batch(&sel, &mut self.rng);
                    let weights = self.model.classifier_weights();
                    let size = (weak[0].height, weak[0].width);
                    for (ia, ib) in pairs {
                        let la = sel.labels[sel.position_of(ia).expect("paired from selection")];
                        let lb = sel.labels[sel.position_of(ib).expect("paired from selection")];
                        let mask = sample_mask(size.0, size.1, &mut self.rng);
                        areas.push(mask.area_fraction);
                        let (mixed, label) = if method == Method::Pepl {
                            let map_a = semantic_map(&out.feature_map(ia), &weights, la, size)?;
                            let map_b = semantic_map(&out.feature_map(ib), &weights, lb, size)?;
                            let r = mix_pair(&weak[ia], &weak[ib], &map_a, &map_b, la, lb, mask)?;
                            (r.mixed_image, r.label)
                        } else {
                            (compose(&weak[ia], &weak[ib], &mask)?, HybridLabel::by_area(la, lb, &mask))
                        };
                        images.push(mixed);
                        hybrid.push(label);
                        mixes.push((ia, ib, label));
                    }
                }
                Method::SupervisedOnly => unreachable!("filtered by uses_unlabeled"),
            }
            predictions = Some(probs);
            selection = Some(sel);
        }

        let lambda = if method.uses_unlabeled() { cfg.lambda } else { 0.0 };
        let (out, cache) = self.model.forward_train(&images)?;
        let logits = out.logits_f64();
        let (lab_logits, mix_logits) = logits.split_at(n_labeled * c);
        let tg = total_loss_grad(lab_logits, &labels, mix_logits, &hybrid, c, cfg.gamma, lambda)?;

        let fail = |this: &Self, detail: String| -> PeplError {
            let dump = this.dump_non_finite(&NonFiniteDump {
                step: this.step,
                labeled_ids: &labeled_ids,
                unlabeled_ids: &unlabeled_ids,
                mixes: &mixes,
                loss: tg.loss,
                lr,
            });
            PeplError::NonFiniteLoss {
                step: this.step,
                detail,
                dump,
            }
        };
        if !tg.loss.l_total.is_finite() {
            return Err(fail(self, format!("{:?}", tg.loss)));
        }
        let grad: Vec<f32> = tg.labeled.iter().chain(&tg.mixed).map(|&g| g as f32).collect();
        let mut grads = self.model.zero_grads();
        self.model.backward(&cache, &grad, &mut grads)?;
        if !grads.is_finite() {
            return Err(fail(self, "non-finite parameter gradient".into()));
        }
        self.optimizer.step(&mut self.model, &grads, lr as f32);

        let n_unlabeled = unlabeled_ids.len();
        let n_selected = selection.as_ref().map_or(0, PseudoLabelSelection::len);
        let metrics = StepMetrics {
            step: self.step,
            epoch,
            lr,
            l_sup: tg.loss.l_sup,
            l_unsup: tg.loss.l_unsup,
            l_total: tg.loss.l_total,
            n_unlabeled,
            n_selected,
            selection_rate: if n_unlabeled > 0 { n_selected as f64 / n_unlabeled as f64 } else { 0.0 },
            n_mixed: mixes.len(),
            mean_rho_a: mean(mixes.iter().map(|m| m.2.rho_a)),
            mean_rho_b: mean(mixes.iter().map(|m| m.2.rho_b)),
            mean_area_fraction: mean(areas.iter().copied()),
            mean_rho_gap: mean(mixes.iter().zip(&areas).map(|(m, f)| (m.2.rho_a - (1.0 - f)).abs())),
            tau_global: self.thresholds.tau_global,
            pseudo_label_accuracy: None,
        };
        self.step += 1;
        Ok(StepReport {
            metrics,
            unlabeled_ids,
            predictions,
            selection,
            mixes,
        })
    }
}

/// Top-1 accuracy of `model` on a labeled set.
pub fn evaluate<B: Backbone + ?Sized>(model: &B, set: &LabeledSet) -> Result<f64> {
    if set.images.is_empty() {
        return Err(PeplError::invalid("cannot evaluate on an empty set"));
    }
    if let Some(&bad) = set.labels.iter().find(|&&l| l >= model.num_classes()) {
        return Err(PeplError::ClassOutOfRange {
            class: bad,
            num_classes: model.num_classes(),
        });
    }
    let mut correct = 0usize;
    for (images, labels) in set.images.chunks(64).zip(set.labels.chunks(64)) {
        let out = model.forward(images)?;
        let logits = out.logits_f64();
        for (row, &y) in logits.chunks_exact(out.num_classes).zip(labels) {
            if argmax(row).0 == y {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / set.images.len() as f64)
}

/// Loads a checkpoint's model and scores it on `ids` of `dataset`.
pub fn evaluate_checkpoint(ckpt: &Checkpoint, dataset: &Dataset, ids: &[usize]) -> Result<f64> {
    if ckpt.num_classes() != dataset.num_classes() {
        return Err(PeplError::invalid(format!(
            "checkpoint has {} classes but the dataset has {}",
            ckpt.num_classes(),
            dataset.num_classes()
        )));
    }
    let (images, labels) = dataset.gather(ids);
    evaluate(&ckpt.model()?, &LabeledSet { images, labels })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochEval {
    pub epoch: usize,
    pub step: u64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub seed: u64,
    pub label_fraction: f64,
    pub steps: u64,
    pub final_accuracy: f64,
    pub best_accuracy: f64,
    pub best_epoch: usize,
    pub mean_selection_rate: f64,
    pub mean_pseudo_label_accuracy: Option<f64>,
    pub mean_rho_gap: Option<f64>,
    pub wall_seconds: f64,
}

pub struct RunArtifacts {
    pub summary: RunSummary,
    pub metrics: Vec<StepMetrics>,
    pub evals: Vec<EpochEval>,
    pub checkpoint: Checkpoint,
}

const CSV_HEADER: [&str; 18] = [
    "kind",
    "step",
    "epoch",
    "lr",
    "l_sup",
    "l_unsup",
    "l_total",
    "n_unlabeled",
    "n_selected",
    "selection_rate",
    "n_mixed",
    "mean_rho_a",
    "mean_rho_b",
    "mean_area_fraction",
    "mean_rho_gap",
    "tau_global",
    "pseudo_label_accuracy",
    "test_accuracy",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl StepMetrics {
    fn csv_record(&self) -> Vec<String> {
        vec![
            "step".into(),
            self.step.to_string(),
            self.epoch.to_string(),
            self.lr.to_string(),
            self.l_sup.to_string(),
            self.l_unsup.to_string(),
            self.l_total.to_string(),
            self.n_unlabeled.to_string(),
            self.n_selected.to_string(),
            self.selection_rate.to_string(),
            self.n_mixed.to_string(),
            opt(self.mean_rho_a),
            opt(self.mean_rho_b),
            opt(self.mean_area_fraction),
            opt(self.mean_rho_gap),
            self.tau_global.to_string(),
            opt(self.pseudo_label_accuracy),
            String::new(),
        ]
    }
}

impl EpochEval {
    fn csv_record(&self) -> Vec<String> {
        let mut row = vec![String::new(); CSV_HEADER.len()];
        row[0] = "eval".into();
        row[1] = self.step.to_string();
        row[2] = self.epoch.to_string();
        row[17] = self.test_accuracy.to_string();
        row
    }
}

struct RunWriter {
    dir: PathBuf,
    csv: csv::Writer<fs::File>,
}

impl RunWriter {
    fn create(dir: &Path, config: &RunConfig) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| PeplError::io(dir, e))?;
        let cfg_path = dir.join("config.toml");
        fs::write(&cfg_path, config.to_toml_string()).map_err(|e| PeplError::io(&cfg_path, e))?;
        let path = dir.join("metrics.csv");
        let mut csv = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        csv.write_record(CSV_HEADER).map_err(|e| csv_err(&path, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv,
        })
    }

    fn row(&mut self, record: Vec<String>) -> Result<()> {
        let path = self.dir.join("metrics.csv");
        self.csv.write_record(record).map_err(|e| csv_err(&path, e))
    }

    fn finish(mut self, summary: &RunSummary, ckpt: &Checkpoint) -> Result<()> {
        let path = self.dir.join("metrics.csv");
        self.csv.flush().map_err(|e| PeplError::io(&path, e))?;
        let spath = self.dir.join("summary.json");
        let mut f = fs::File::create(&spath).map_err(|e| PeplError::io(&spath, e))?;
        serde_json::to_writer_pretty(&mut f, summary)?;
        writeln!(f).map_err(|e| PeplError::io(&spath, e))?;
        ckpt.save(&self.dir.join("checkpoint.bin"))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> PeplError {
    PeplError::io(path, std::io::Error::other(e.to_string()))
}

/// Derives the split for `config` (label fraction and split seed) from a dataset.
pub fn split_for(config: &RunConfig, dataset: &Dataset) -> Result<Split> {
    split(
        &dataset.labels,
        dataset.num_classes(),
        &SplitSpec {
            label_fraction: config.data.label_fraction,
            test_fraction: config.data.test_fraction,
            stratified: true,
            seed: config.data.split_seed,
        },
    )
}

/// Full run: trains to completion, evaluating on the test split each
/// `eval_every` epochs, and writes artifacts when `output_dir` is set.
pub fn train(config: &RunConfig, dataset: &Dataset, split: &Split) -> Result<RunArtifacts> {
    train_with_progress(config, dataset, split, |_| {})
}

/// [`train`] with a callback invoked after every test evaluation.
pub fn train_with_progress(
    config: &RunConfig,
    dataset: &Dataset,
    split: &Split,
    mut progress: impl FnMut(&EpochEval),
) -> Result<RunArtifacts> {
    config.validate()?;
    let started = Instant::now();
    let (data, hidden, test) = partition(dataset, split);
    let mut trainer = Trainer::new(config.clone(), &data)?;
    let mut writer = match &config.output_dir {
        Some(dir) => Some(RunWriter::create(dir, config)?),
        None => None,
    };
    let spe = trainer.schedule().steps_per_epoch;
    let mut metrics = Vec::with_capacity(trainer.total_steps() as usize);
    let mut evals = Vec::new();
    while !trainer.is_finished() {
        let report = trainer.step()?;
        let mut m = report.metrics;
        if let Some(sel) = &report.selection {
            // diagnostics only: hidden labels are read after the step has been taken
            let hits = sel
                .selected_indices
                .iter()
                .zip(&sel.labels)
                .filter(|(&i, &y)| hidden[report.unlabeled_ids[i]] == y)
                .count();
            m.pseudo_label_accuracy = (!sel.is_empty()).then(|| hits as f64 / sel.len() as f64);
        }
        if let Some(w) = writer.as_mut() {
            w.row(m.csv_record())?;
        }
        let epoch_done = trainer.current_step() % spe as u64 == 0;
        let epoch = m.epoch;
        metrics.push(m);
        let every = config.train.eval_every;
        if epoch_done && !test.images.is_empty() && (trainer.is_finished() || (every > 0 && (epoch + 1) % every == 0)) {
            let e = EpochEval {
                epoch,
                step: trainer.current_step(),
                test_accuracy: evaluate(trainer.model(), &test)?,
            };
            if let Some(w) = writer.as_mut() {
                w.row(e.csv_record())?;
            }
            progress(&e);
            evals.push(e);
        }
    }
    let best = evals
        .iter()
        .fold(None::<&EpochEval>, |acc, e| match acc {
            Some(b) if b.test_accuracy >= e.test_accuracy => Some(b),
            _ => Some(e),
        });
    let summary = RunSummary {
        method: config.method,
        seed: config.seed,
        label_fraction: config.data.label_fraction,
        steps: trainer.current_step(),
        final_accuracy: evals.last().map_or(f64::NAN, |e| e.test_accuracy),
        best_accuracy: best.map_or(f64::NAN, |e| e.test_accuracy),
        best_epoch: best.map_or(0, |e| e.epoch),
        mean_selection_rate: mean(metrics.iter().map(|m| m.selection_rate)).unwrap_or(0.0),
        mean_pseudo_label_accuracy: mean(metrics.iter().filter_map(|m| m.pseudo_label_accuracy)),
        mean_rho_gap: mean(metrics.iter().filter_map(|m| m.mean_rho_gap)),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    let checkpoint = trainer.checkpoint();
    if let Some(w) = writer {
        w.finish(&summary, &checkpoint)?;
    }
    Ok(RunArtifacts {
        summary,
        metrics,
        evals,
        checkpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_visits_each_index_once_per_pass() {
        let idx = stream_indices(3, 9, 7, 0, 21);
        for pass in idx.chunks(7) {
            let mut p = pass.to_vec();
            p.sort_unstable();
            assert_eq!(p, (0..7).collect::<Vec<_>>());
        }
        assert_eq!(stream_indices(3, 9, 7, 5, 10), idx[5..15].to_vec());
        assert_ne!(stream_indices(4, 9, 7, 0, 7), idx[..7].to_vec());
    }
}
