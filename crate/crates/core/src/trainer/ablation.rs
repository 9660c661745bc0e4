use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::{Method, RunConfig};
use super::{split_for, train};
use crate::datagen::Dataset;
use crate::error::{PeplError, Result};

/// Methods × label fractions × seeds to sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationGrid {
    pub methods: Vec<Method>,
    pub label_fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Worker threads; 1 runs sequentially.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub method: Method,
    pub label_fraction: f64,
    pub seed: u64,
    pub final_accuracy: f64,
    pub best_accuracy: f64,
    pub mean_rho_gap: Option<f64>,
}

/// Aggregate over seeds for one (method, fraction) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub method: Method,
    pub label_fraction: f64,
    pub runs: usize,
    pub mean_final: f64,
    pub std_final: f64,
    pub mean_best: f64,
    pub std_best: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AblationTable {
    pub cells: Vec<AblationCell>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

impl AblationTable {
    /// One row per (method, fraction), in first-seen order; std is the sample
    /// standard deviation over seeds.
    pub fn rows(&self) -> Vec<AblationRow> {
        let mut keys: Vec<(Method, f64)> = Vec::new();
        for c in &self.cells {
            if !keys.iter().any(|&(m, f)| m == c.method && f == c.label_fraction) {
                keys.push((c.method, c.label_fraction));
            }
        }
        keys.into_iter()
            .map(|(method, label_fraction)| {
                let group: Vec<&AblationCell> = self
                    .cells
                    .iter()
                    .filter(|c| c.method == method && c.label_fraction == label_fraction)
                    .collect();
                let finals: Vec<f64> = group.iter().map(|c| c.final_accuracy).collect();
                let bests: Vec<f64> = group.iter().map(|c| c.best_accuracy).collect();
                let (mean_final, std_final) = mean_std(&finals);
                let (mean_best, std_best) = mean_std(&bests);
                AblationRow {
                    method,
                    label_fraction,
                    runs: group.len(),
                    mean_final,
                    std_final,
                    mean_best,
                    std_best,
                }
            })
            .collect()
    }

    pub fn row(&self, method: Method, label_fraction: f64) -> Option<AblationRow> {
        self.rows()
            .into_iter()
            .find(|r| r.method == method && r.label_fraction == label_fraction)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<20} {:>8} {:>5} {:>18} {:>18}\n",
            "method", "labeled", "runs", "final acc (%)", "best acc (%)"
        );
        for r in self.rows() {
            let _ = writeln!(
                out,
                "{:<20} {:>8.3} {:>5} {:>10.2} ± {:<5.2} {:>10.2} ± {:<5.2}",
                r.method.as_str(),
                r.label_fraction,
                r.runs,
                100.0 * r.mean_final,
                100.0 * r.std_final,
                100.0 * r.mean_best,
                100.0 * r.std_best
            );
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in self.rows() {
            w.serialize(r).map_err(|e| PeplError::invalid(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| PeplError::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Trains every grid cell on `dataset` and collects test accuracies.
///
/// Each cell starts from `base` with its method, seed and label fraction
/// substituted; with `base.output_dir` set, cells write to
/// `<dir>/<method>_f<fraction>_s<seed>`.
pub fn run_ablation(base: &RunConfig, dataset: &Dataset, grid: &AblationGrid) -> Result<AblationTable> {
    let mut jobs_list = Vec::new();
    for &method in &grid.methods {
        for &label_fraction in &grid.label_fractions {
            for &seed in &grid.seeds {
                let mut cfg = base.clone();
                cfg.method = method;
                cfg.seed = seed;
                cfg.data.label_fraction = label_fraction;
                cfg.output_dir = base
                    .output_dir
                    .as_ref()
                    .map(|d| d.join(format!("{method}_f{label_fraction}_s{seed}")));
                cfg.validate()?;
                jobs_list.push(cfg);
            }
        }
    }
    if jobs_list.is_empty() {
        return Err(PeplError::invalid("ablation grid is empty"));
    }

    let run_one = |cfg: &RunConfig| -> Result<AblationCell> {
        let split = split_for(cfg, dataset)?;
        let s = train(cfg, dataset, &split)?.summary;
        Ok(AblationCell {
            method: cfg.method,
            label_fraction: cfg.data.label_fraction,
            seed: cfg.seed,
            final_accuracy: s.final_accuracy,
            best_accuracy: s.best_accuracy,
            mean_rho_gap: s.mean_rho_gap,
        })
    };

    let results: Vec<Result<AblationCell>> = if grid.jobs <= 1 {
        jobs_list.iter().map(run_one).collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<AblationCell>>>> =
            Mutex::new((0..jobs_list.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..grid.jobs.min(jobs_list.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(cfg) = jobs_list.get(i) else { break };
                    let r = run_one(cfg);
                    slots.lock().expect("no worker panicked")[i] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .expect("no worker panicked")
            .into_iter()
            .map(|r| r.expect("every job ran"))
            .collect()
    };
    Ok(AblationTable {
        cells: results.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(method: Method, seed: u64, acc: f64) -> AblationCell {
        AblationCell {
            method,
            label_fraction: 0.1,
            seed,
            final_accuracy: acc,
            best_accuracy: acc,
            mean_rho_gap: None,
        }
    }

    #[test]
    fn rows_aggregate_over_seeds() {
        let t = AblationTable {
            cells: vec![
                cell(Method::Pepl, 0, 0.5),
                cell(Method::Pepl, 1, 0.7),
                cell(Method::AreaMix, 0, 0.4),
            ],
        };
        let r = t.row(Method::Pepl, 0.1).unwrap();
        assert_eq!(r.runs, 2);
        assert!((r.mean_final - 0.6).abs() < 1e-12);
        assert!((r.std_final - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!(t.row(Method::AreaMix, 0.1).unwrap().std_final, 0.0);
        assert_eq!(t.rows().len(), 2);
        assert!(t.to_text().contains("area_mix"));
        assert_eq!(t.to_csv().unwrap().lines().count(), 3);
    }
}
