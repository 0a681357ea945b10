use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::FilterKind;
use crate::scoring::{binary_from_assessment, AbcdScores, Label, TdsAssessment};

use super::logistic::{predict_labels, predict_proba, train_logistic, LogisticModel, TrainConfig};
use super::metrics::{compute_metrics, MetricsReport};
use super::{apply_normalizer, fit_normalizer, sample_weights, stratified_split, FeatureVector, Normalizer};

/// One image's extracted scores, or the reason extraction failed.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub image_id: String,
    pub label: Label,
    pub scores: std::result::Result<AbcdScores, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSettings {
    pub train_fraction: f64,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub stream: FilterKind,
    pub method: String,
    #[serde(flatten)]
    pub metrics: MetricsReport,
    pub excluded_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationOutcome {
    /// `tds_rule` and `logistic_regression` on the test split, then
    /// `tds_rule_all` on every usable record.
    pub reports: Vec<MethodReport>,
    pub excluded: Vec<(String, String)>,
    pub model: LogisticModel,
    pub normalizer: Normalizer,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

pub const METHOD_RULE: &str = "tds_rule";
pub const METHOD_RULE_ALL: &str = "tds_rule_all";
pub const METHOD_LOGISTIC: &str = "logistic_regression";

/// Scores the TDS rule and a class-weighted logistic regression on a seeded
/// stratified split. Failed records are excluded and counted.
pub fn evaluate_rule_and_model(
    records: &[FeatureRecord],
    stream: FilterKind,
    settings: &EvaluationSettings,
) -> Result<EvaluationOutcome> {
    let mut usable: Vec<(Label, AbcdScores, TdsAssessment)> = Vec::new();
    let mut excluded = Vec::new();
    for r in records {
        match &r.scores {
            Ok(s) => usable.push((r.label, *s, TdsAssessment::from_scores(s)?)),
            Err(reason) => excluded.push((r.image_id.clone(), reason.clone())),
        }
    }
    let labels: Vec<Label> = usable.iter().map(|u| u.0).collect();
    let features: Vec<FeatureVector> = usable
        .iter()
        .map(|(_, s, t)| FeatureVector::from_scores(s, t.tds))
        .collect();

    let (train_idx, test_idx) = stratified_split(&labels, settings.train_fraction, settings.seed)?;
    if test_idx.is_empty() {
        return Err(Error::InvalidArgument("test split is empty".into()));
    }

    let pick = |idx: &[usize]| -> (Vec<FeatureVector>, Vec<Label>) {
        (
            idx.iter().map(|&i| features[i]).collect(),
            idx.iter().map(|&i| labels[i]).collect(),
        )
    };
    let (train_x, train_y) = pick(&train_idx);
    let (test_x, test_y) = pick(&test_idx);

    let rule_report = |idx: &[usize]| -> Result<MetricsReport> {
        let truth: Vec<Label> = idx.iter().map(|&i| labels[i]).collect();
        let pred: Vec<Label> = idx.iter().map(|&i| binary_from_assessment(&usable[i].2)).collect();
        let score: Vec<f64> = idx.iter().map(|&i| usable[i].2.tds).collect();
        compute_metrics(&truth, &pred, &score)
    };

    let normalizer = fit_normalizer(&train_x)?;
    let train_n = apply_normalizer(&normalizer, &train_x);
    let test_n = apply_normalizer(&normalizer, &test_x);
    let weights = sample_weights(&train_y)?;
    let config = TrainConfig {
        seed: settings.seed,
        ..settings.train
    };
    let run = train_logistic(&train_n, &train_y, &weights, config)?;
    let proba = predict_proba(&run.model, &test_n);
    let model_metrics = compute_metrics(&test_y, &predict_labels(&proba), &proba)?;

    let all: Vec<usize> = (0..usable.len()).collect();
    let report = |method: &str, metrics| MethodReport {
        stream,
        method: method.to_string(),
        metrics,
        excluded_count: excluded.len(),
    };
    let reports = vec![
        report(METHOD_RULE, rule_report(&test_idx)?),
        report(METHOD_LOGISTIC, model_metrics),
        report(METHOD_RULE_ALL, rule_report(&all)?),
    ];
    Ok(EvaluationOutcome {
        reports,
        excluded,
        model: run.model,
        normalizer,
        train_indices: train_idx,
        test_indices: test_idx,
    })
}

/// Aligned text table with one row per method.
pub fn render_table(reports: &[MethodReport]) -> String {
    let mut out = format!(
        "{:<8} {:<20} {:>8} {:>9} {:>8} {:>8} {:>8} {:>5} {:>5} {:>5} {:>5}\n",
        "stream", "method", "accuracy", "precision", "recall", "f1", "auc", "tp", "fp", "fn", "tn"
    );
    for r in reports {
        let m = &r.metrics;
        let auc = m.auc.map_or_else(|| "n/a".to_string(), |a| format!("{a:.3}"));
        out.push_str(&format!(
            "{:<8} {:<20} {:>8.3} {:>9.3} {:>8.3} {:>8.3} {:>8} {:>5} {:>5} {:>5} {:>5}\n",
            r.stream.stream_name(),
            r.method,
            m.accuracy,
            m.precision,
            m.recall,
            m.f1,
            auc,
            m.confusion.tp,
            m.confusion.fp,
            m.confusion.fn_,
            m.confusion.tn
        ));
    }
    out
}
