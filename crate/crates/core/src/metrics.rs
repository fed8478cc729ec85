//! Binary classification metrics computed from raw scores or logits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub roc_auc: f64,
    pub avg_precision: f64,
    pub balanced_acc: f64,
}

impl MetricReport {
    /// All three metrics from validation logits.
    pub fn evaluate(logits: &[f64], labels: &[u8]) -> Result<Self> {
        Ok(Self {
            roc_auc: roc_auc(logits, labels)?,
            avg_precision: average_precision(logits, labels)?,
            balanced_acc: balanced_accuracy(logits, labels)?,
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::RocAuc => self.roc_auc,
            Metric::AvgPrecision => self.avg_precision,
            Metric::BalancedAcc => self.balanced_acc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RocAuc,
    AvgPrecision,
    BalancedAcc,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::RocAuc, Metric::AvgPrecision, Metric::BalancedAcc];

    pub fn name(self) -> &'static str {
        match self {
            Metric::RocAuc => "roc_auc",
            Metric::AvgPrecision => "avg_precision",
            Metric::BalancedAcc => "balanced_acc",
        }
    }
}

/// 1-based ranks with ties sharing the mean of their positions. Every
/// result is a multiple of ½.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Length {
            what: "scores",
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Invalid("scores must be finite".into()));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Invalid(format!("label {bad} is not binary")));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((pos, labels.len() - pos))
}

/// Probability that a random positive outscores a random negative, ties
/// counting ½, via the positive rank sum.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// Step-wise area under the precision-recall curve, thresholds taken at
/// each distinct score from the top.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, _) = check_inputs(scores, labels)?;
    if pos == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// Mean of sensitivity and specificity with positive predictions at
/// `logit > 0`.
pub fn balanced_accuracy(logits: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_inputs(logits, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let (mut tp, mut tn) = (0usize, 0usize);
    for (&z, &l) in logits.iter().zip(labels) {
        match (z > 0.0, l) {
            (true, 1) => tp += 1,
            (false, 0) => tn += 1,
            _ => {}
        }
    }
    Ok((tp as f64 / pos as f64 + tn as f64 / neg as f64) / 2.0)
}
