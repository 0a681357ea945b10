use std::path::Path;

use abcd_core::dataset::MANIFEST_HEADER;
use abcd_core::ml::{evaluate_rule_and_model, render_table, EvaluationOutcome, EvaluationSettings, MethodReport};
use abcd_core::FilterKind;
use serde::Serialize;

use super::assess::to_pretty_json;
use super::extract::{extract_features, load_manifest, parse_features_csv, FeatureTable};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{create_dir, write_file};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedImage {
    pub image_id: String,
    pub reason: String,
}

/// Top-level metrics document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsDocument {
    pub seed: u64,
    pub stream: FilterKind,
    pub train_fraction: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub train_count: usize,
    pub test_count: usize,
    pub reports: Vec<MethodReport>,
    pub excluded: Vec<ExcludedImage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOutput {
    pub document: MetricsDocument,
    pub outcome: EvaluationOutcome,
    pub metrics_json: String,
    pub table: String,
    pub model_text: String,
}

fn first_data_line(text: &str) -> &str {
    text.lines().find(|l| !l.starts_with('#')).unwrap_or("").trim_end()
}

/// Reads a features CSV as-is, or extracts features from a manifest first.
pub fn load_feature_table(input: &Path, config: &RunConfig) -> CliResult<FeatureTable> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::io(format!("reading {}: {e}", input.display())))?;
    if first_data_line(&text) == MANIFEST_HEADER.join(",") {
        let manifest = load_manifest(input)?;
        extract_features(&manifest, config, None)
    } else {
        parse_features_csv(&text, config.stream).map_err(|e| e.context(input.display()))
    }
}

pub fn evaluate_table(table: &FeatureTable, config: &RunConfig) -> CliResult<EvaluateOutput> {
    let settings = EvaluationSettings {
        train_fraction: config.train_fraction,
        train: config.train,
        seed: config.seed,
    };
    let outcome = evaluate_rule_and_model(&table.all_records(), table.stream, &settings)?;
    let document = MetricsDocument {
        seed: config.seed,
        stream: table.stream,
        train_fraction: config.train_fraction,
        learning_rate: config.train.learning_rate,
        epochs: config.train.epochs,
        train_count: outcome.train_indices.len(),
        test_count: outcome.test_indices.len(),
        reports: outcome.reports.clone(),
        excluded: outcome
            .excluded
            .iter()
            .map(|(id, reason)| ExcludedImage {
                image_id: id.clone(),
                reason: reason.clone(),
            })
            .collect(),
    };
    let model_text = format!("# stream={}\n{}", table.stream, outcome.model.to_text());
    Ok(EvaluateOutput {
        metrics_json: to_pretty_json(&document) + "\n",
        table: render_table(&document.reports),
        model_text,
        document,
        outcome,
    })
}

/// The `evaluate` command; with `out`, writes `metrics.json`,
/// `metrics.txt` and `model.txt`.
pub fn cmd_evaluate(input: &Path, config: &RunConfig, out: Option<&Path>) -> CliResult<EvaluateOutput> {
    let table = load_feature_table(input, config)?;
    let output = evaluate_table(&table, config)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_file(&dir.join("metrics.json"), &output.metrics_json)?;
        write_file(&dir.join("metrics.txt"), &output.table)?;
        write_file(&dir.join("model.txt"), &output.model_text)?;
    }
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use abcd_core::{AbcdScores, Label, TdsAssessment};

    use crate::commands::extract::FeatureRow;

    fn separable(n: usize) -> FeatureTable {
        let rows = (0..n)
            .map(|i| {
                let malignant = i % 2 == 0;
                let scores = if malignant {
                    AbcdScores::new(2, 6 + (i % 3) as u8, 4, 1).unwrap()
                } else {
                    AbcdScores::new(0, (i % 2) as u8, 1, 0).unwrap()
                };
                FeatureRow {
                    image_id: format!("s{i:03}"),
                    stream: FilterKind::Median3,
                    scores,
                    tds: TdsAssessment::from_scores(&scores).unwrap(),
                    label: if malignant { Label::Malignant } else { Label::Benign },
                }
            })
            .collect();
        FeatureTable {
            seed: 0,
            stream: FilterKind::Median3,
            rows,
            failures: vec![],
        }
    }

    #[test]
    fn separable_table_is_perfect_and_json_is_flat() {
        let out = evaluate_table(&separable(50), &RunConfig::default()).unwrap();
        assert!(out.document.reports.iter().all(|r| r.metrics.accuracy == 1.0));
        let v: serde_json::Value = serde_json::from_str(&out.metrics_json).unwrap();
        let r = &v["reports"][1];
        assert_eq!(r["method"], "logistic_regression");
        for key in [
            "stream",
            "tp",
            "fp",
            "fn",
            "tn",
            "accuracy",
            "precision",
            "recall",
            "f1",
            "auc",
            "excluded_count",
        ] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["seed"], 0);
        assert!(out.model_text.starts_with("# stream=median\na "));
    }

    #[test]
    fn single_class_is_domain_error() {
        let mut t = separable(20);
        t.rows.retain(|r| r.label == Label::Benign);
        assert_eq!(evaluate_table(&t, &RunConfig::default()).unwrap_err().exit_code(), 2);
    }
}
