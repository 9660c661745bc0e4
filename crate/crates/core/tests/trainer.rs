use pepl_core::datagen::{generate, split, Dataset, Split, SplitSpec, SyntheticSpec};
use pepl_core::model::{Backbone, ToyBackbone, ToyBackboneConfig};
use pepl_core::threshold::{argmax, PredictionBatch};
use pepl_core::trainer::{
    evaluate, evaluate_checkpoint, partition, train, Checkpoint, LabeledSet, Method, RunConfig, Trainer,
};
use pepl_core::PeplError;

fn small_dataset() -> Dataset {
    generate(&SyntheticSpec {
        num_classes: 4,
        per_class: 16,
        num_families: 2,
        seed: 11,
        ..SyntheticSpec::default()
    })
    .unwrap()
}

fn small_split(d: &Dataset) -> Split {
    split(
        &d.labels,
        d.num_classes(),
        &SplitSpec {
            label_fraction: 0.25,
            test_fraction: 0.25,
            stratified: true,
            seed: 3,
        },
    )
    .unwrap()
}

fn small_config(method: Method) -> RunConfig {
    let mut cfg = RunConfig {
        method,
        seed: 5,
        ..RunConfig::default()
    };
    cfg.model.widths = vec![4, 8];
    cfg.train.batch_size = 4;
    cfg.train.mu = 3;
    cfg.train.epochs = 6;
    cfg.train.warmup_epochs = 1;
    cfg.train.beta = 0.9;
    cfg.schedule.step_period = 3;
    cfg.schedule.cosine_tail = 2;
    cfg
}

#[test]
fn resume_is_bit_exact() {
    let d = small_dataset();
    let (data, _, _) = partition(&d, &small_split(&d));
    for method in Method::ALL {
        let cfg = small_config(method);
        let mut straight = Trainer::new(cfg.clone(), &data).unwrap();
        for _ in 0..20 {
            straight.step().unwrap();
        }
        let mut first = Trainer::new(cfg, &data).unwrap();
        for _ in 0..10 {
            first.step().unwrap();
        }
        let bytes = first.checkpoint().to_bytes().unwrap();
        drop(first);
        let ckpt = Checkpoint::from_bytes(&bytes).unwrap();
        let mut resumed = Trainer::from_checkpoint(&ckpt, &data).unwrap();
        for _ in 0..10 {
            resumed.step().unwrap();
        }
        let a = straight.checkpoint();
        let b = resumed.checkpoint();
        let bits = |v: &Vec<Vec<f32>>| v.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.params), bits(&b.params), "{method}");
        assert_eq!(bits(&a.velocity), bits(&b.velocity), "{method}");
        assert_eq!(a.thresholds, b.thresholds, "{method}");
        assert_eq!(a.rng, b.rng, "{method}");
    }
}

#[test]
fn trainer_thresholds_match_replayed_stream() {
    let d = small_dataset();
    let (data, _, _) = partition(&d, &small_split(&d));
    let cfg = small_config(Method::Pepl);
    let beta = cfg.train.beta;
    let mut trainer = Trainer::new(cfg, &data).unwrap();
    let c = data.num_classes;
    let mut tau = 1.0 / c as f64;
    let mut expect = vec![1.0 / c as f64; c];
    for _ in 0..25 {
        let report = trainer.step().unwrap();
        let batch: &PredictionBatch = report.predictions.as_ref().unwrap();
        let n = batch.len() as f64;
        let mut mean_max = 0.0;
        let mut mean_class = vec![0.0; c];
        for i in 0..batch.len() {
            let row = batch.row(i);
            mean_max += row.iter().cloned().fold(f64::MIN, f64::max) / n;
            for k in 0..c {
                mean_class[k] += row[k] / n;
            }
        }
        tau = beta * tau + (1.0 - beta) * mean_max;
        for k in 0..c {
            expect[k] = beta * expect[k] + (1.0 - beta) * mean_class[k];
        }
        let got = trainer.thresholds();
        assert!((got.tau_global - tau).abs() < 1e-9);
        for k in 0..c {
            assert!((got.class_expect[k] - expect[k]).abs() < 1e-9);
        }
    }
}

#[test]
fn hidden_labels_do_not_affect_training() {
    let d = small_dataset();
    let s = small_split(&d);
    let mut scrambled = d.clone();
    for &i in &s.unlabeled {
        scrambled.labels[i] = (scrambled.labels[i] + 1) % d.num_classes();
    }
    let mut cfg = small_config(Method::Pepl);
    cfg.train.epochs = 3;
    cfg.schedule.cosine_tail = 1;
    let a = train(&cfg, &d, &s).unwrap();
    let b = train(&cfg, &scrambled, &s).unwrap();
    assert_eq!(a.checkpoint.params, b.checkpoint.params);
    let acc = |r: &pepl_core::trainer::RunArtifacts| {
        r.metrics.iter().filter_map(|m| m.pseudo_label_accuracy).collect::<Vec<_>>()
    };
    assert_ne!(acc(&a), acc(&b));
}

#[test]
fn step_metrics_stay_in_unit_interval() {
    let d = small_dataset();
    let s = small_split(&d);
    for method in Method::ALL {
        let mut cfg = small_config(method);
        cfg.train.epochs = 3;
        cfg.schedule.cosine_tail = 1;
        let run = train(&cfg, &d, &s).unwrap();
        for m in &run.metrics {
            let stats = [Some(m.selection_rate), m.mean_rho_a, m.mean_rho_b, m.mean_area_fraction, m.pseudo_label_accuracy];
            for v in stats.into_iter().flatten() {
                assert!((0.0..=1.0).contains(&v), "{method}: {m:?}");
            }
            assert!(m.l_total.is_finite());
        }
        if method == Method::SupervisedOnly {
            assert!(run.metrics.iter().all(|m| m.n_unlabeled == 0 && m.l_unsup == 0.0));
        }
    }
}

#[test]
fn warmup_skips_the_mixed_loss() {
    let d = small_dataset();
    let (data, _, _) = partition(&d, &small_split(&d));
    let cfg = small_config(Method::Pepl);
    let mut trainer = Trainer::new(cfg, &data).unwrap();
    let spe = trainer.schedule().steps_per_epoch;
    for _ in 0..spe {
        let r = trainer.step().unwrap();
        assert_eq!(r.metrics.n_mixed, 0);
        assert!(r.predictions.is_some());
    }
    assert!(trainer.thresholds().step as usize == spe);
}

#[test]
fn artifacts_are_written_and_eval_matches_summary() {
    let d = small_dataset();
    let s = small_split(&d);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(Method::AreaMix);
    cfg.output_dir = Some(dir.path().join("run"));
    let run = train(&cfg, &d, &s).unwrap();
    let out = dir.path().join("run");
    for f in ["metrics.csv", "summary.json", "checkpoint.bin", "config.toml"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let step_rows = csv.lines().filter(|l| l.starts_with("step,")).count();
    let eval_rows = csv.lines().filter(|l| l.starts_with("eval,")).count();
    assert_eq!(step_rows, run.metrics.len());
    assert_eq!(eval_rows, cfg.train.epochs);
    let echoed = RunConfig::from_toml_str(&std::fs::read_to_string(out.join("config.toml")).unwrap()).unwrap();
    assert_eq!(echoed, cfg);

    let ckpt = Checkpoint::load(&out.join("checkpoint.bin")).unwrap();
    let acc = evaluate_checkpoint(&ckpt, &d, &s.test).unwrap();
    assert_eq!(acc, run.summary.final_accuracy);
    assert_eq!(acc, evaluate_checkpoint(&ckpt, &d, &s.test).unwrap());
    assert!(run.summary.best_accuracy >= run.summary.final_accuracy);
}

#[test]
fn checkpoint_rejects_class_mismatch_and_corruption() {
    let d = small_dataset();
    let s = small_split(&d);
    let mut cfg = small_config(Method::SupervisedOnly);
    cfg.train.epochs = 2;
    cfg.schedule.cosine_tail = 1;
    let ckpt = train(&cfg, &d, &s).unwrap().checkpoint;
    let other = generate(&SyntheticSpec {
        num_classes: 6,
        per_class: 4,
        num_families: 2,
        ..SyntheticSpec::default()
    })
    .unwrap();
    assert!(matches!(
        evaluate_checkpoint(&ckpt, &other, &[0, 1]),
        Err(PeplError::InvalidArgument(_))
    ));
    let mut bytes = ckpt.to_bytes().unwrap();
    assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ckpt);
    bytes.push(0);
    assert!(Checkpoint::from_bytes(&bytes).is_err());
    bytes.truncate(bytes.len() - 9);
    assert!(Checkpoint::from_bytes(&bytes).is_err());
    assert!(Checkpoint::from_bytes(b"NOTACKPT").is_err());
}

#[test]
fn evaluate_contract() {
    let d = generate(&SyntheticSpec {
        per_class: 20,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let ids: Vec<usize> = (0..d.len()).collect();
    let (images, labels) = d.gather(&ids);
    for seed in 0..5 {
        let model = ToyBackbone::new(ToyBackboneConfig {
            seed,
            widths: vec![8, 16, 32],
            ..ToyBackboneConfig::default()
        })
        .unwrap();
        let set = LabeledSet {
            images: images.clone(),
            labels: labels.clone(),
        };
        let acc = evaluate(&model, &set).unwrap();
        assert!((0.0..=0.25).contains(&acc), "untrained accuracy {acc}");
        assert_eq!(acc, evaluate(&model, &set).unwrap());

        let out = model.forward(&images).unwrap();
        let predicted: Vec<usize> = (0..images.len()).map(|i| argmax(&out.logits_f64()[i * 10..(i + 1) * 10]).0).collect();
        let perfect = LabeledSet {
            images: images.clone(),
            labels: predicted,
        };
        assert_eq!(evaluate(&model, &perfect).unwrap(), 1.0);
    }
    let bad = LabeledSet {
        images: images[..1].to_vec(),
        labels: vec![10],
    };
    let model = ToyBackbone::new(ToyBackboneConfig::default()).unwrap();
    assert!(matches!(evaluate(&model, &bad), Err(PeplError::ClassOutOfRange { .. })));
}
