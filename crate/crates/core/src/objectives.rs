//! Supervised, hybrid-weighted unsupervised and total losses, with their
//! analytic gradients with respect to the logits.
//!
//! All reductions are means over the batch dimension.

use serde::{Deserialize, Serialize};

use crate::error::{PeplError, Result};
use crate::mixer::HybridLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_sup: f64,
    pub l_unsup: f64,
    pub l_total: f64,
    pub gamma: f64,
    pub lambda: f64,
}

/// Numerically stable `ln Σ exp(x)`.
pub fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + row.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|&x| (x - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn check_logits(logits: &[f64], num_classes: usize, rows: usize) -> Result<()> {
    if num_classes == 0 || logits.len() != rows * num_classes {
        return Err(PeplError::shape(
            format!("{rows}x{num_classes} logits"),
            format!("{} values", logits.len()),
        ));
    }
    Ok(())
}

fn check_class(class: usize, num_classes: usize) -> Result<()> {
    if class >= num_classes {
        return Err(PeplError::ClassOutOfRange { class, num_classes });
    }
    Ok(())
}

/// Mean cross-entropy of `softmax(logits)` against hard labels.
pub fn supervised_loss(logits: &[f64], labels: &[usize], num_classes: usize) -> Result<f64> {
    supervised_loss_grad(logits, labels, num_classes).map(|(l, _)| l)
}

pub fn supervised_loss_grad(logits: &[f64], labels: &[usize], num_classes: usize) -> Result<(f64, Vec<f64>)> {
    if labels.is_empty() {
        return Err(PeplError::invalid("supervised loss needs at least one sample"));
    }
    check_logits(logits, num_classes, labels.len())?;
    let n = labels.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &y) in logits.chunks_exact(num_classes).zip(labels) {
        check_class(y, num_classes)?;
        loss += log_sum_exp(row) - row[y];
        let start = grad.len();
        grad.extend(softmax(row).into_iter().map(|p| p / n));
        grad[start + y] -= 1.0 / n;
    }
    Ok((loss / n, grad))
}

/// Mean over mixed samples of `ρ_a·CE(p, class_a) + ρ_b·CE(p, class_b)`,
/// both terms evaluated on the mixed image's prediction. Zero when empty.
pub fn unsupervised_loss(mixed_logits: &[f64], labels: &[HybridLabel], num_classes: usize) -> Result<f64> {
    unsupervised_loss_grad(mixed_logits, labels, num_classes).map(|(l, _)| l)
}

pub fn unsupervised_loss_grad(
    mixed_logits: &[f64],
    labels: &[HybridLabel],
    num_classes: usize,
) -> Result<(f64, Vec<f64>)> {
    check_logits(mixed_logits, num_classes, labels.len())?;
    if labels.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let m = labels.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(mixed_logits.len());
    for (row, h) in mixed_logits.chunks_exact(num_classes).zip(labels) {
        check_class(h.class_a, num_classes)?;
        check_class(h.class_b, num_classes)?;
        let lse = log_sum_exp(row);
        loss += h.rho_a * (lse - row[h.class_a]) + h.rho_b * (lse - row[h.class_b]);
        let weight = h.rho_a + h.rho_b;
        let start = grad.len();
        grad.extend(softmax(row).into_iter().map(|p| weight * p / m));
        grad[start + h.class_a] -= h.rho_a / m;
        grad[start + h.class_b] -= h.rho_b / m;
    }
    Ok((loss / m, grad))
}

pub fn total_loss(l_sup: f64, l_unsup: f64, gamma: f64, lambda: f64) -> Result<LossBreakdown> {
    if !(gamma >= 0.0) || !(lambda >= 0.0) {
        return Err(PeplError::invalid(format!(
            "loss weights must be nonnegative, got gamma={gamma}, lambda={lambda}"
        )));
    }
    Ok(LossBreakdown {
        l_sup,
        l_unsup,
        l_total: gamma * l_sup + lambda * l_unsup,
        gamma,
        lambda,
    })
}

/// Gradients of the total loss with respect to the labeled and mixed logits.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalGradient {
    pub loss: LossBreakdown,
    pub labeled: Vec<f64>,
    pub mixed: Vec<f64>,
}

pub fn total_loss_grad(
    labeled_logits: &[f64],
    labels: &[usize],
    mixed_logits: &[f64],
    hybrid: &[HybridLabel],
    num_classes: usize,
    gamma: f64,
    lambda: f64,
) -> Result<TotalGradient> {
    let (l_sup, mut g_sup) = supervised_loss_grad(labeled_logits, labels, num_classes)?;
    let (l_unsup, mut g_unsup) = unsupervised_loss_grad(mixed_logits, hybrid, num_classes)?;
    let loss = total_loss(l_sup, l_unsup, gamma, lambda)?;
    g_sup.iter_mut().for_each(|g| *g *= gamma);
    g_unsup.iter_mut().for_each(|g| *g *= lambda);
    Ok(TotalGradient {
        loss,
        labeled: g_sup,
        mixed: g_unsup,
    })
}
