use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::Label;

/// Binary confusion counts with malignant as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_labels(truth: &[Label], predicted: &[Label]) -> Self {
        let mut c = Confusion::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t.is_positive(), p.is_positive()) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub confusion: Confusion,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when the labels contain a single class.
    pub auc: Option<f64>,
}

impl MetricsReport {
    pub fn from_confusion(c: Confusion, auc: Option<f64>) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            confusion: c,
            accuracy: ratio(c.tp + c.tn, c.total()),
            precision,
            recall,
            f1,
            auc,
        }
    }

    /// True negative rate.
    pub fn specificity(&self) -> f64 {
        let c = &self.confusion;
        if c.tn + c.fp == 0 {
            0.0
        } else {
            c.tn as f64 / (c.tn + c.fp) as f64
        }
    }
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Computed from mid-ranks of the pooled scores.
pub fn roc_auc(labels: &[Label], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::InvalidArgument("labels and scores differ in length".into()));
    }
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("scores contain NaN".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            if labels[k].is_positive() {
                rank_sum_pos += mid;
            }
        }
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Confusion-derived metrics plus AUC over the continuous scores.
pub fn compute_metrics(labels: &[Label], predicted: &[Label], scores: &[f64]) -> Result<MetricsReport> {
    if labels.len() != predicted.len() || labels.len() != scores.len() {
        return Err(Error::InvalidArgument("metric inputs differ in length".into()));
    }
    let auc = match roc_auc(labels, scores) {
        Ok(a) => Some(a),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsReport::from_confusion(
        Confusion::from_labels(labels, predicted),
        auc,
    ))
}
