use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pepl_core::cam::semantic_map;
use pepl_core::datagen::{generate, split, Dataset, SplitSpec, SyntheticSpec};
use pepl_core::model::Backbone;
use pepl_core::store::StoredDataset;
use pepl_core::threshold::argmax;
use pepl_core::trainer::{
    evaluate, run_ablation, split_for, train_with_progress, AblationGrid, Checkpoint, LabeledSet, Method, RunConfig,
};
use pepl_core::viz::{overlay, side_by_side, upscale, write_png};
use pepl_core::{PeplError, Result};

const DATA_ENV: &str = "PEPL_DATA_DIR";

#[derive(Parser)]
#[command(name = "pepl", version, about = "Semi-supervised fine-grained classification with semantic pseudo-label mixing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic marker dataset and its split.
    GenData(GenData),
    /// Train one model.
    Train(Train),
    /// Score a checkpoint on a dataset split.
    Eval(Eval),
    /// Train a grid of methods × label fractions × seeds and tabulate accuracy.
    Ablate(Ablate),
    /// Export original / CAM-overlay PNGs for the predicted class.
    VizCam(VizCam),
}

#[derive(Args)]
struct GenData {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    #[arg(long, default_value_t = 5)]
    families: usize,
    /// Image side length in pixels.
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, default_value_t = 4)]
    marker_min: usize,
    #[arg(long, default_value_t = 6)]
    marker_max: usize,
    #[arg(long, default_value_t = 0.06)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    label_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    force: bool,
}

/// Options shared by commands that build a run config.
#[derive(Args)]
struct RunOptions {
    /// TOML run config; flags below take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory (falls back to the config, then $PEPL_DATA_DIR).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Extra `section.key=value` overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct Train {
    #[command(flatten)]
    run: RunOptions,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    label_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to runs/<method>_f<fraction>_s<seed>.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Eval {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
    /// test, labeled, unlabeled, or all.
    #[arg(long, default_value = "test")]
    split: String,
}

#[derive(Args)]
struct Ablate {
    #[command(flatten)]
    run: RunOptions,
    #[arg(long, value_delimiter = ',', default_value = "pepl,area_mix,supervised_only")]
    methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3")]
    fractions: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    /// Parallel training runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "runs/ablation")]
    out: PathBuf,
}

#[derive(Args)]
struct VizCam {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    ids: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Pixel upscaling factor of the exported PNGs.
    #[arg(long, default_value_t = 4)]
    scale: usize,
    /// Heatmap opacity in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    alpha: f32,
}

fn resolve_data_dir(flag: Option<&Path>, config: Option<&Path>) -> Result<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| config.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(DATA_ENV).map(PathBuf::from))
        .ok_or_else(|| PeplError::invalid(format!("no dataset given (use --data, data.dir in the config, or ${DATA_ENV})")))
}

fn load_data(dir: &Path) -> Result<StoredDataset> {
    if !dir.join(pepl_core::store::MANIFEST).is_file() {
        return Err(PeplError::invalid(format!("no dataset found at {}", dir.display())));
    }
    StoredDataset::load(dir)
}

fn base_config(opts: &RunOptions) -> Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| PeplError::io(path, e))?;
            RunConfig::from_toml_str(&text)?
        }
        None => RunConfig::default(),
    };
    for kv in &opts.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| PeplError::invalid(format!("override '{kv}' is not KEY=VALUE")))?;
        cfg.set_override(k.trim(), v.trim())?;
    }
    if let Some(e) = opts.epochs {
        cfg.train.epochs = e;
        cfg.schedule.cosine_tail = cfg.schedule.cosine_tail.min(e);
        cfg.train.warmup_epochs = cfg.train.warmup_epochs.min(e.saturating_sub(1));
    }
    let dir = resolve_data_dir(opts.data.as_deref(), cfg.data.dir.as_deref())?;
    cfg.data.dir = Some(dir);
    Ok(cfg)
}

fn gen_data(a: GenData) -> Result<()> {
    let spec = SyntheticSpec {
        num_classes: a.classes,
        per_class: a.per_class,
        height: a.size,
        width: a.size,
        num_families: a.families,
        marker_min: a.marker_min,
        marker_max: a.marker_max,
        noise: a.noise,
        seed: a.seed,
    };
    let dataset = generate(&spec)?;
    let split_spec = SplitSpec {
        label_fraction: a.label_fraction,
        test_fraction: a.test_fraction,
        stratified: true,
        seed: a.split_seed,
    };
    let split = split(&dataset.labels, dataset.num_classes(), &split_spec)?;
    let stored = StoredDataset {
        dataset,
        split_spec,
        split,
    };
    stored.save(&a.out, a.force)?;
    let m = stored.manifest();
    println!(
        "wrote {} images ({} classes) to {}: {} labeled, {} unlabeled, {} test",
        m.num_images,
        spec.num_classes,
        a.out.display(),
        m.counts.labeled,
        m.counts.unlabeled,
        m.counts.test
    );
    Ok(())
}

fn train_cmd(a: Train) -> Result<()> {
    let mut cfg = base_config(&a.run)?;
    if let Some(m) = a.method {
        cfg.method = m;
    }
    if let Some(f) = a.label_fraction {
        cfg.data.label_fraction = f;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(out) = a.out {
        cfg.output_dir = Some(out);
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from(format!(
            "runs/{}_f{}_s{}",
            cfg.method, cfg.data.label_fraction, cfg.seed
        )));
    }
    cfg.validate()?;
    let data = load_data(cfg.data.dir.as_deref().expect("resolved"))?;
    let split = split_for(&cfg, &data.dataset)?;
    eprintln!("effective config:\n{}", cfg.to_toml_string());
    let run = train_with_progress(&cfg, &data.dataset, &split, |e| {
        eprintln!("epoch {:>3}  step {:>6}  test accuracy {:.4}", e.epoch + 1, e.step, e.test_accuracy);
    })?;
    let s = &run.summary;
    println!(
        "{} seed {} labeled {}: final accuracy {:.4}, best {:.4} (epoch {}), {:.1}s; artifacts in {}",
        s.method,
        s.seed,
        s.label_fraction,
        s.final_accuracy,
        s.best_accuracy,
        s.best_epoch + 1,
        s.wall_seconds,
        cfg.output_dir.as_ref().expect("set above").display()
    );
    Ok(())
}

fn eval_cmd(a: Eval) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let dir = resolve_data_dir(a.data.as_deref(), ckpt.config.data.dir.as_deref())?;
    let data = load_data(&dir)?;
    if ckpt.num_classes() != data.dataset.num_classes() {
        return Err(PeplError::invalid(format!(
            "checkpoint has {} classes but the dataset has {}",
            ckpt.num_classes(),
            data.dataset.num_classes()
        )));
    }
    let split = split_for(&ckpt.config, &data.dataset)?;
    let ids: Vec<usize> = match a.split.as_str() {
        "test" => split.test,
        "labeled" => split.labeled,
        "unlabeled" => split.unlabeled,
        "all" => (0..data.dataset.len()).collect(),
        other => return Err(PeplError::invalid(format!("unknown split '{other}'"))),
    };
    let (images, labels) = data.dataset.gather(&ids);
    let acc = evaluate(&ckpt.model()?, &LabeledSet { images, labels })?;
    println!("accuracy {acc} on {} {} images", ids.len(), a.split);
    Ok(())
}

fn ablate_cmd(a: Ablate) -> Result<()> {
    let mut cfg = base_config(&a.run)?;
    cfg.output_dir = Some(a.out.clone());
    cfg.validate()?;
    let data = load_data(cfg.data.dir.as_deref().expect("resolved"))?;
    std::fs::create_dir_all(&a.out).map_err(|e| PeplError::io(&a.out, e))?;
    let echo = a.out.join("config.toml");
    std::fs::write(&echo, cfg.to_toml_string()).map_err(|e| PeplError::io(&echo, e))?;
    let grid = AblationGrid {
        methods: a.methods,
        label_fractions: a.fractions,
        seeds: a.seeds,
        jobs: a.jobs,
    };
    eprintln!(
        "running {} × {} × {} runs",
        grid.methods.len(),
        grid.label_fractions.len(),
        grid.seeds.len()
    );
    let table = run_ablation(&cfg, &data.dataset, &grid)?;
    let text = table.to_text();
    let csv_path = a.out.join("ablation.csv");
    std::fs::write(&csv_path, table.to_csv()?).map_err(|e| PeplError::io(&csv_path, e))?;
    let txt_path = a.out.join("ablation.txt");
    std::fs::write(&txt_path, &text).map_err(|e| PeplError::io(&txt_path, e))?;
    print!("{text}");
    Ok(())
}

fn viz_cmd(a: VizCam) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let dir = resolve_data_dir(a.data.as_deref(), ckpt.config.data.dir.as_deref())?;
    let data = load_data(&dir)?;
    let d: &Dataset = &data.dataset;
    if let Some(&bad) = a.ids.iter().find(|&&i| i >= d.len()) {
        return Err(PeplError::UnknownImage(bad));
    }
    let model = ckpt.model()?;
    let weights = model.classifier_weights();
    std::fs::create_dir_all(&a.out).map_err(|e| PeplError::io(&a.out, e))?;
    for &id in &a.ids {
        let image = &d.images[id];
        let fwd = model.forward(std::slice::from_ref(image))?;
        let class = argmax(&fwd.logits_f64()).0;
        let map = semantic_map(&fwd.feature_map(0), &weights, class, (image.height, image.width))?;
        let panel = side_by_side(image, &overlay(image, &map, a.alpha)?, 1)?;
        let name = format!("cam_{id:05}_pred{class}_true{}.png", d.labels[id]);
        let path = a.out.join(&name);
        write_png(&path, &upscale(&panel, a.scale))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Ablate(a) => ablate_cmd(a),
        Command::VizCam(a) => viz_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
