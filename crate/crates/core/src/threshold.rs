//! Self-adaptive confidence thresholds for pseudo-label selection.
//!
//! Two exponential moving averages are tracked over the unlabeled stream:
//! a global confidence level (mean of the per-sample max probability) and a
//! per-class expectation (mean probability mass of each class). The per-class
//! selection threshold is the class expectation divided by its maximum over
//! classes, scaled by the global level, so the most-expected class receives
//! exactly the global threshold and rarer classes receive proportionally
//! lower ones.

use serde::{Deserialize, Serialize};

use crate::error::{PeplError, Result};

/// Tolerance for the row-sum check on incoming probability rows.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Class-probability rows for one unlabeled batch, row-major `[n × C]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBatch {
    probs: Vec<f64>,
    num_classes: usize,
}

impl PredictionBatch {
    pub fn new(probs: Vec<f64>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(PeplError::invalid(format!(
                "prediction batch needs at least 2 classes, got {num_classes}"
            )));
        }
        if !probs.len().is_multiple_of(num_classes) {
            return Err(PeplError::shape(
                format!("a multiple of {num_classes} entries"),
                probs.len().to_string(),
            ));
        }
        for (row, chunk) in probs.chunks_exact(num_classes).enumerate() {
            let sum: f64 = chunk.iter().sum();
            let min = chunk.iter().copied().fold(f64::INFINITY, f64::min);
            if !(min >= 0.0) || !((sum - 1.0).abs() <= SIMPLEX_TOLERANCE) {
                return Err(PeplError::NotSimplex { row, sum, min });
            }
        }
        Ok(Self { probs, num_classes })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_classes = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != num_classes) {
            return Err(PeplError::shape(
                format!("{num_classes} columns"),
                bad.len().to_string(),
            ));
        }
        Self::new(rows.concat(), num_classes)
    }

    /// Softmax of raw logits, row by row.
    pub fn from_logits(logits: &[f64], num_classes: usize) -> Result<Self> {
        if num_classes == 0 || !logits.len().is_multiple_of(num_classes) {
            return Err(PeplError::shape(
                format!("a multiple of {num_classes} logits"),
                logits.len().to_string(),
            ));
        }
        let mut probs = Vec::with_capacity(logits.len());
        for row in logits.chunks_exact(num_classes) {
            probs.extend(crate::objectives::softmax(row));
        }
        Self::new(probs, num_classes)
    }

    pub fn len(&self) -> usize {
        self.probs.len() / self.num_classes
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks_exact(self.num_classes)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// Returns `(argmax, max)`; ties resolve to the lowest class id.
pub fn argmax(row: &[f64]) -> (usize, f64) {
    let mut best = (0, row[0]);
    for (c, &p) in row.iter().enumerate().skip(1) {
        if p > best.1 {
            best = (c, p);
        }
    }
    best
}

/// EMA state of the adaptive thresholds. Serialized as the flat record
/// `{step, beta, tau_global, class_expect}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdState {
    pub step: u64,
    pub beta: f64,
    pub tau_global: f64,
    pub class_expect: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PseudoLabelSelection {
    /// Ascending batch indices.
    pub selected_indices: Vec<usize>,
    pub labels: Vec<usize>,
    pub confidences: Vec<f64>,
}

impl PseudoLabelSelection {
    pub fn len(&self) -> usize {
        self.selected_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected_indices.is_empty()
    }

    /// Position of `batch_index` within the selection, if selected.
    pub fn position_of(&self, batch_index: usize) -> Option<usize> {
        self.selected_indices.binary_search(&batch_index).ok()
    }
}

impl ThresholdState {
    pub fn init(num_classes: usize, beta: f64) -> Result<Self> {
        if num_classes < 2 {
            return Err(PeplError::invalid(format!(
                "threshold state needs at least 2 classes, got {num_classes}"
            )));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(PeplError::invalid(format!(
                "EMA momentum must lie in [0, 1), got {beta}"
            )));
        }
        let uniform = 1.0 / num_classes as f64;
        Ok(Self {
            step: 0,
            beta,
            tau_global: uniform,
            class_expect: vec![uniform; num_classes],
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_expect.len()
    }

    fn check_batch(&self, batch: &PredictionBatch) -> Result<()> {
        if batch.num_classes() != self.num_classes() {
            return Err(PeplError::shape(
                format!("{} columns", self.num_classes()),
                format!("{} columns", batch.num_classes()),
            ));
        }
        Ok(())
    }

    /// One EMA step over a batch; returns the state at `step + 1`.
    pub fn update(&self, batch: &PredictionBatch) -> Result<Self> {
        self.check_batch(batch)?;
        if batch.is_empty() {
            return Err(PeplError::invalid("cannot update thresholds on an empty batch"));
        }
        let n = batch.len() as f64;
        let c = self.num_classes();
        let mut max_sum = 0.0;
        let mut class_sum = vec![0.0; c];
        for row in batch.rows() {
            max_sum += argmax(row).1;
            for (acc, &p) in class_sum.iter_mut().zip(row) {
                *acc += p;
            }
        }
        let beta = self.beta;
        let tau_global = beta * self.tau_global + (1.0 - beta) * (max_sum / n);
        let class_expect = self
            .class_expect
            .iter()
            .zip(&class_sum)
            .map(|(&prev, &s)| beta * prev + (1.0 - beta) * (s / n))
            .collect();
        Ok(Self {
            step: self.step + 1,
            beta,
            tau_global,
            class_expect,
        })
    }

    /// Per-class thresholds: `class_expect / max(class_expect) * tau_global`.
    pub fn class_thresholds(&self) -> Vec<f64> {
        let peak = self
            .class_expect
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        self.class_expect
            .iter()
            .map(|&e| e / peak * self.tau_global)
            .collect()
    }

    pub fn select(&self, batch: &PredictionBatch) -> Result<PseudoLabelSelection> {
        self.check_batch(batch)?;
        select_with_thresholds(&self.class_thresholds(), batch)
    }
}

/// Keeps row `i` iff `max(row) > thresholds[argmax(row)]` (strict).
pub fn select_with_thresholds(
    thresholds: &[f64],
    batch: &PredictionBatch,
) -> Result<PseudoLabelSelection> {
    if thresholds.len() != batch.num_classes() {
        return Err(PeplError::shape(
            format!("{} thresholds", batch.num_classes()),
            thresholds.len().to_string(),
        ));
    }
    let mut out = PseudoLabelSelection::default();
    for (i, row) in batch.rows().enumerate() {
        let (label, conf) = argmax(row);
        if conf > thresholds[label] {
            out.selected_indices.push(i);
            out.labels.push(label);
            out.confidences.push(conf);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn state(tau: f64, expect: &[f64], beta: f64) -> ThresholdState {
        ThresholdState {
            step: 0,
            beta,
            tau_global: tau,
            class_expect: expect.to_vec(),
        }
    }

    #[test]
    fn init_is_uniform() {
        let s = ThresholdState::init(4, 0.999).unwrap();
        assert_eq!(s.tau_global, 0.25);
        assert_eq!(s.class_expect, vec![0.25; 4]);
        assert_eq!(s.step, 0);
        assert_eq!(ThresholdState::init(2, 0.5).unwrap().tau_global, 0.5);
    }

    #[test]
    fn init_rejects_bad_arguments() {
        assert!(ThresholdState::init(1, 0.9).is_err());
        assert!(ThresholdState::init(3, 1.0).is_err());
        assert!(ThresholdState::init(3, -0.1).is_err());
    }

    #[test]
    fn one_step_update_by_hand() {
        let s = state(0.25, &[0.25; 4], 0.9);
        let batch = PredictionBatch::from_rows(&[vec![0.7, 0.1, 0.1, 0.1]]).unwrap();
        let next = s.update(&batch).unwrap();
        assert_abs_diff_eq!(next.tau_global, 0.295, epsilon = 1e-12);
        for (got, want) in next.class_expect.iter().zip([0.295, 0.235, 0.235, 0.235]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_eq!(next.step, 1);
        // pure update
        assert_eq!(s.step, 0);
        assert_eq!(s.tau_global, 0.25);
    }

    #[test]
    fn uniform_stream_is_a_fixed_point() {
        let mut s = ThresholdState::init(5, 0.37).unwrap();
        let batch = PredictionBatch::from_rows(&vec![vec![0.2; 5]; 3]).unwrap();
        for _ in 0..50 {
            s = s.update(&batch).unwrap();
        }
        assert_abs_diff_eq!(s.tau_global, 0.2, epsilon = 1e-15);
        for e in &s.class_expect {
            assert_abs_diff_eq!(*e, 0.2, epsilon = 1e-15);
        }
    }

    #[test]
    fn update_rejects_mismatch_and_non_simplex() {
        let s = ThresholdState::init(3, 0.9).unwrap();
        let two = PredictionBatch::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert!(s.update(&two).is_err());
        assert!(PredictionBatch::from_rows(&[vec![0.5, 0.6, 0.0]]).is_err());
        assert!(PredictionBatch::from_rows(&[vec![1.2, -0.2, 0.0]]).is_err());
        assert!(PredictionBatch::from_rows(&[vec![f64::NAN, 0.5, 0.5]]).is_err());
    }

    #[test]
    fn maxnorm_thresholds_by_hand() {
        let t = state(0.5, &[0.2, 0.4], 0.9).class_thresholds();
        assert_abs_diff_eq!(t[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(t[1], 0.5, epsilon = 1e-15);

        let t = state(0.8, &[0.1, 0.2, 0.4, 0.8], 0.9).class_thresholds();
        for (got, want) in t.iter().zip([0.1, 0.2, 0.4, 0.8]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }

        let t = state(0.37, &[0.3; 6], 0.9).class_thresholds();
        assert!(t.iter().all(|&x| x == 0.37));
    }

    #[test]
    fn selection_by_hand() {
        let fresh = ThresholdState::init(4, 0.999).unwrap();
        let uniform = PredictionBatch::from_rows(&[vec![0.25; 4]]).unwrap();
        assert!(fresh.select(&uniform).unwrap().is_empty());

        let s = state(0.5, &[0.2, 0.4], 0.9);
        let batch = PredictionBatch::from_rows(&[vec![0.6, 0.4], vec![0.45, 0.55]]).unwrap();
        let sel = s.select(&batch).unwrap();
        assert_eq!(sel.selected_indices, vec![0, 1]);
        assert_eq!(sel.labels, vec![0, 1]);
        assert_eq!(sel.confidences, vec![0.6, 0.55]);

        // max equal to its class threshold is excluded
        let edge = PredictionBatch::from_rows(&[vec![0.5, 0.5], vec![0.75, 0.25]]).unwrap();
        let sel = select_with_thresholds(&[0.75, 0.5], &edge).unwrap();
        assert!(sel.is_empty());
    }

    fn simplex_rows(c: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, c), n).prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum::<f64>() + 1e-9;
                    let mut out: Vec<f64> = r.iter().map(|x| (x + 1e-9 / r.len() as f64) / s).collect();
                    let total: f64 = out.iter().sum();
                    out.iter_mut().for_each(|x| *x /= total);
                    out
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn values_stay_in_unit_interval(
            beta in 0.0f64..0.9999,
            batches in prop::collection::vec(simplex_rows(4, 3), 1..20),
        ) {
            let mut s = ThresholdState::init(4, beta).unwrap();
            for rows in &batches {
                s = s.update(&PredictionBatch::from_rows(rows).unwrap()).unwrap();
                prop_assert!(s.tau_global > 0.0 && s.tau_global <= 1.0);
                prop_assert!(s.class_expect.iter().all(|&e| e > 0.0 && e <= 1.0));
            }
        }

        #[test]
        fn maxnorm_ceiling_and_scale_invariance(
            expect in prop::collection::vec(1e-6f64..1.0, 2..12),
            tau in 1e-3f64..1.0,
            scale in 1e-3f64..1e3,
        ) {
            let s = state(tau, &expect, 0.9);
            let t = s.class_thresholds();
            let peak = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(peak, tau);
            let scaled = state(tau, &expect.iter().map(|e| e * scale).collect::<Vec<_>>(), 0.9);
            for (a, b) in t.iter().zip(scaled.class_thresholds()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn raising_thresholds_shrinks_selection(
            rows in simplex_rows(3, 8),
            base in prop::collection::vec(0.0f64..1.0, 3),
            bump in prop::collection::vec(0.0f64..0.5, 3),
        ) {
            let batch = PredictionBatch::from_rows(&rows).unwrap();
            let raised: Vec<f64> = base.iter().zip(&bump).map(|(a, b)| a + b).collect();
            let low = select_with_thresholds(&base, &batch).unwrap();
            let high = select_with_thresholds(&raised, &batch).unwrap();
            prop_assert!(high.selected_indices.iter().all(|i| low.selected_indices.contains(i)));
            for (k, &i) in low.selected_indices.iter().enumerate() {
                prop_assert_eq!(low.labels[k], argmax(batch.row(i)).0);
                prop_assert!(low.confidences[k] > base[low.labels[k]]);
            }
        }
    }
}
