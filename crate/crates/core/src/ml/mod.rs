//! Trainable baseline and evaluation harness: feature vectors, z-score
//! normalization, stratified splitting, class weighting, class-weighted
//! logistic regression and binary classification metrics.

mod evaluate;
mod logistic;
mod metrics;

pub use evaluate::{
    evaluate_rule_and_model, render_table, EvaluationOutcome, EvaluationSettings, FeatureRecord, MethodReport,
    METHOD_LOGISTIC, METHOD_RULE, METHOD_RULE_ALL,
};
pub use logistic::{
    loss_and_gradient, predict_labels, predict_proba, sigmoid, train_logistic, LogisticModel, TrainConfig, TrainingRun,
};
pub use metrics::{compute_metrics, roc_auc, Confusion, MetricsReport};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{AbcdScores, Label};

pub const FEATURE_DIM: usize = 5;

/// `(A, B, C, D, TDS)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn new(values: [f64; FEATURE_DIM]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("feature values must be finite".into()));
        }
        Ok(Self(values))
    }

    pub fn from_scores(scores: &AbcdScores, tds: f64) -> Self {
        Self([scores.a as f64, scores.b as f64, scores.c as f64, scores.d as f64, tds])
    }
}

/// Per-dimension training mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub means: [f64; FEATURE_DIM],
    pub stds: [f64; FEATURE_DIM],
}

impl Normalizer {
    pub fn apply(&self, v: &FeatureVector) -> FeatureVector {
        let mut out = [0.0; FEATURE_DIM];
        for (k, o) in out.iter_mut().enumerate() {
            *o = if self.stds[k] == 0.0 {
                0.0
            } else {
                (v.0[k] - self.means[k]) / self.stds[k]
            };
        }
        FeatureVector(out)
    }
}

pub fn fit_normalizer(train: &[FeatureVector]) -> Result<Normalizer> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("cannot fit a normalizer on an empty set".into()));
    }
    let n = train.len() as f64;
    let mut means = [0.0; FEATURE_DIM];
    for v in train {
        for (m, x) in means.iter_mut().zip(v.0) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut stds = [0.0; FEATURE_DIM];
    for v in train {
        for k in 0..FEATURE_DIM {
            stds[k] += (v.0[k] - means[k]).powi(2);
        }
    }
    stds.iter_mut().for_each(|s| *s = (*s / n).sqrt());
    Ok(Normalizer { means, stds })
}

pub fn apply_normalizer(norm: &Normalizer, features: &[FeatureVector]) -> Vec<FeatureVector> {
    features.iter().map(|v| norm.apply(v)).collect()
}

/// Inverse-frequency class weights `N / (2·N_c)`, as `(benign, malignant)`.
pub fn class_weights(labels: &[Label]) -> Result<(f64, f64)> {
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    let neg = labels.len() - pos;
    if neg == 0 {
        return Err(Error::MissingClass("benign"));
    }
    if pos == 0 {
        return Err(Error::MissingClass("malignant"));
    }
    let n = labels.len() as f64;
    Ok((n / (2.0 * neg as f64), n / (2.0 * pos as f64)))
}

/// Per-sample weights from the class weights.
pub fn sample_weights(labels: &[Label]) -> Result<Vec<f64>> {
    let (wb, wm) = class_weights(labels)?;
    Ok(labels.iter().map(|l| if l.is_positive() { wm } else { wb }).collect())
}

/// Seeded per-class shuffle and split at `round(fraction · class size)`.
/// Returns ascending `(train, test)` index lists that partition `0..labels.len()`.
pub fn stratified_split(labels: &[Label], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, name) in [(Label::Benign, "benign"), (Label::Malignant, "malignant")] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            return Err(Error::MissingClass(name));
        }
        idx.shuffle(&mut rng);
        let cut = (train_fraction * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(benign: usize, malignant: usize) -> Vec<Label> {
        let mut v = vec![Label::Benign; benign];
        v.extend(vec![Label::Malignant; malignant]);
        v
    }

    #[test]
    fn split_sizes() {
        let l = labels(500, 500);
        let (train, test) = stratified_split(&l, 0.8, 42).unwrap();
        let count = |idx: &[usize], c| idx.iter().filter(|&&i| l[i] == c).count();
        assert_eq!(
            (count(&train, Label::Benign), count(&train, Label::Malignant)),
            (400, 400)
        );
        assert_eq!(
            (count(&test, Label::Benign), count(&test, Label::Malignant)),
            (100, 100)
        );

        let l = labels(10, 10);
        let (train, test) = stratified_split(&l, 0.8, 1).unwrap();
        assert_eq!((train.len(), test.len()), (16, 4));
    }

    #[test]
    fn split_is_deterministic() {
        let l = labels(37, 21);
        assert_eq!(
            stratified_split(&l, 0.8, 9).unwrap(),
            stratified_split(&l, 0.8, 9).unwrap()
        );
        assert_ne!(
            stratified_split(&l, 0.8, 9).unwrap(),
            stratified_split(&l, 0.8, 10).unwrap()
        );
    }

    #[test]
    fn split_rejects_missing_class_and_bad_fraction() {
        assert_eq!(
            stratified_split(&labels(5, 0), 0.8, 0),
            Err(Error::MissingClass("malignant"))
        );
        assert!(stratified_split(&labels(5, 5), 1.0, 0).is_err());
        assert!(stratified_split(&labels(5, 5), 0.0, 0).is_err());
    }

    #[test]
    fn normalizer_population_std() {
        let data: Vec<FeatureVector> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&x| FeatureVector([x, 5.0, 0.0, 0.0, 0.0]))
            .collect();
        let n = fit_normalizer(&data).unwrap();
        let out = apply_normalizer(&n, &data);
        let col: Vec<f64> = out.iter().map(|v| v.0[0]).collect();
        for (got, want) in col.iter().zip([-1.2247, 0.0, 1.2247]) {
            assert!((got - want).abs() < 1e-4);
        }
        assert!(out.iter().all(|v| v.0[1] == 0.0));
    }

    #[test]
    fn normalizer_empty_errors() {
        assert!(fit_normalizer(&[]).is_err());
    }

    #[test]
    fn class_weight_examples() {
        assert_eq!(class_weights(&labels(500, 500)).unwrap(), (1.0, 1.0));
        let (b, m) = class_weights(&labels(900, 100)).unwrap();
        assert!((b - 0.5556).abs() < 1e-3 && (m - 5.0).abs() < 1e-3);
        assert!(class_weights(&labels(3, 0)).is_err());
    }

    proptest! {
        #[test]
        fn weighted_mass_is_half_per_class(b in 1usize..300, m in 1usize..300) {
            let l = labels(b, m);
            let w = sample_weights(&l).unwrap();
            let n = l.len() as f64;
            let mass_b: f64 = w.iter().zip(&l).filter(|(_, l)| !l.is_positive()).map(|(w, _)| w).sum();
            let mass_m: f64 = w.iter().zip(&l).filter(|(_, l)| l.is_positive()).map(|(w, _)| w).sum();
            prop_assert!((mass_b - n / 2.0).abs() < 1e-9);
            prop_assert!((mass_m - n / 2.0).abs() < 1e-9);
        }

        #[test]
        fn normalized_training_columns_are_standard(
            rows in proptest::collection::vec(proptest::array::uniform5(-50.0..50.0f64), 2..60)
        ) {
            let data: Vec<FeatureVector> = rows.into_iter().map(FeatureVector).collect();
            let norm = fit_normalizer(&data).unwrap();
            let out = apply_normalizer(&norm, &data);
            for k in 0..FEATURE_DIM {
                if norm.stds[k] < 1e-6 {
                    continue;
                }
                let n = out.len() as f64;
                let mean = out.iter().map(|v| v.0[k]).sum::<f64>() / n;
                let var = out.iter().map(|v| (v.0[k] - mean).powi(2)).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn split_partitions_indices(b in 1usize..80, m in 1usize..80, seed in 0u64..50) {
            let l = labels(b, m);
            let (mut train, test) = stratified_split(&l, 0.8, seed).unwrap();
            train.extend(test);
            train.sort_unstable();
            prop_assert_eq!(train, (0..l.len()).collect::<Vec<_>>());
        }

        #[test]
        fn normalizer_ignores_test_order(
            rows in proptest::collection::vec(proptest::array::uniform5(-5.0..5.0f64), 4..30),
            seed in 0u64..100,
        ) {
            // The normalizer is fitted on the training rows only; shuffling
            // the held-out rows cannot change it.
            let data: Vec<FeatureVector> = rows.into_iter().map(FeatureVector).collect();
            let split = data.len() / 2;
            let train = &data[..split];
            let mut test = data[split..].to_vec();
            let a = fit_normalizer(train).unwrap();
            test.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let b = fit_normalizer(train).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
