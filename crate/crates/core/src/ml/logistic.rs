use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::Label;

use super::{FeatureVector, FEATURE_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: [f64; FEATURE_DIM],
    pub bias: f64,
    pub config: TrainConfig,
}

impl LogisticModel {
    pub fn zero(config: TrainConfig) -> Self {
        Self {
            weights: [0.0; FEATURE_DIM],
            bias: 0.0,
            config,
        }
    }

    #[inline]
    pub fn logit(&self, x: &FeatureVector) -> f64 {
        self.weights.iter().zip(x.0).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Plain-text weight dump, one `name value` pair per line.
    pub fn to_text(&self) -> String {
        let names = ["a", "b", "c", "d", "tds"];
        let mut out = String::new();
        for (n, w) in names.iter().zip(self.weights) {
            out.push_str(&format!("{n} {w:.17e}\n"));
        }
        out.push_str(&format!("bias {:.17e}\n", self.bias));
        out.push_str(&format!(
            "# learning_rate={} epochs={} seed={}\n",
            self.config.learning_rate, self.config.epochs, self.config.seed
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub model: LogisticModel,
    /// Loss before each update, then the final loss.
    pub losses: Vec<f64>,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Weighted mean binary cross-entropy and its gradient with respect to
/// `(weights, bias)`.
pub fn loss_and_gradient(
    weights: &[f64; FEATURE_DIM],
    bias: f64,
    features: &[FeatureVector],
    labels: &[Label],
    sample_weights: &[f64],
) -> (f64, [f64; FEATURE_DIM], f64) {
    let n = features.len() as f64;
    let mut loss = 0.0;
    let mut gw = [0.0; FEATURE_DIM];
    let mut gb = 0.0;
    for ((x, l), sw) in features.iter().zip(labels).zip(sample_weights) {
        let z = weights.iter().zip(x.0).map(|(w, v)| w * v).sum::<f64>() + bias;
        let y = if l.is_positive() { 1.0 } else { 0.0 };
        loss += sw * (softplus(z) - y * z);
        let r = sw * (sigmoid(z) - y);
        for (g, v) in gw.iter_mut().zip(x.0) {
            *g += r * v;
        }
        gb += r;
    }
    gw.iter_mut().for_each(|g| *g /= n);
    (loss / n, gw, gb / n)
}

/// Full-batch gradient descent from zero on the class-weighted
/// cross-entropy for a fixed number of epochs.
pub fn train_logistic(
    features: &[FeatureVector],
    labels: &[Label],
    sample_weights: &[f64],
    config: TrainConfig,
) -> Result<TrainingRun> {
    if features.len() != labels.len() || features.len() != sample_weights.len() {
        return Err(Error::InvalidArgument(
            "features, labels and weights differ in length".into(),
        ));
    }
    if features.len() < 2 || !labels.contains(&Label::Benign) || !labels.contains(&Label::Malignant) {
        return Err(Error::InvalidArgument(
            "training needs at least two examples spanning both classes".into(),
        ));
    }
    let mut model = LogisticModel::zero(config);
    let mut losses = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..config.epochs {
        let (loss, gw, gb) = loss_and_gradient(&model.weights, model.bias, features, labels, sample_weights);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        losses.push(loss);
        for (w, g) in model.weights.iter_mut().zip(gw) {
            *w -= config.learning_rate * g;
        }
        model.bias -= config.learning_rate * gb;
        if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
    }
    let (loss, _, _) = loss_and_gradient(&model.weights, model.bias, features, labels, sample_weights);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: config.epochs });
    }
    losses.push(loss);
    Ok(TrainingRun { model, losses })
}

pub fn predict_proba(model: &LogisticModel, features: &[FeatureVector]) -> Vec<f64> {
    features.iter().map(|x| sigmoid(model.logit(x))).collect()
}

/// Hard labels at probability 0.5.
pub fn predict_labels(probabilities: &[f64]) -> Vec<Label> {
    probabilities
        .iter()
        .map(|&p| if p >= 0.5 { Label::Malignant } else { Label::Benign })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fv(x: f64) -> FeatureVector {
        FeatureVector([x, 0.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn zero_model_predicts_half() {
        let m = LogisticModel::zero(TrainConfig::default());
        assert_eq!(predict_proba(&m, &[fv(3.0), fv(-100.0)]), vec![0.5, 0.5]);
    }

    #[test]
    fn sigmoid_symmetry_and_limits() {
        for z in [-40.0, -3.0, -1e-3, 0.0, 0.7, 12.0, 800.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() < 1e-12);
        }
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!(sigmoid(5.0) < sigmoid(6.0));
    }

    #[test]
    fn separable_one_dimensional_data() {
        let x: Vec<FeatureVector> = (0..20).map(|i| fv(if i % 2 == 0 { -1.0 } else { 1.0 })).collect();
        let y: Vec<Label> = (0..20)
            .map(|i| if i % 2 == 0 { Label::Benign } else { Label::Malignant })
            .collect();
        let w = vec![1.0; 20];
        let run = train_logistic(
            &x,
            &y,
            &w,
            TrainConfig {
                learning_rate: 0.1,
                epochs: 500,
                seed: 0,
            },
        )
        .unwrap();
        let pred = predict_labels(&predict_proba(&run.model, &x));
        assert_eq!(pred, y);
        assert!(run.model.weights[0] > 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x: Vec<FeatureVector> = (0..12)
            .map(|_| FeatureVector(std::array::from_fn(|_| rng.gen_range(-2.0..2.0))))
            .collect();
        let y: Vec<Label> = (0..12)
            .map(|i| if i % 3 == 0 { Label::Malignant } else { Label::Benign })
            .collect();
        let sw: Vec<f64> = (0..12).map(|_| rng.gen_range(0.5..2.0)).collect();
        let w: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let b = 0.3;
        let (_, gw, gb) = loss_and_gradient(&w, b, &x, &y, &sw);
        let h = 1e-5;
        for k in 0..5 {
            let (mut wp, mut wm) = (w, w);
            wp[k] += h;
            wm[k] -= h;
            let fd = (loss_and_gradient(&wp, b, &x, &y, &sw).0 - loss_and_gradient(&wm, b, &x, &y, &sw).0) / (2.0 * h);
            assert!(
                (fd - gw[k]).abs() <= 1e-5 * gw[k].abs().max(1e-3),
                "k={k} fd={fd} an={}",
                gw[k]
            );
        }
        let fd =
            (loss_and_gradient(&w, b + h, &x, &y, &sw).0 - loss_and_gradient(&w, b - h, &x, &y, &sw).0) / (2.0 * h);
        assert!((fd - gb).abs() <= 1e-5 * gb.abs().max(1e-3));
    }

    #[test]
    fn loss_nonincreasing_at_small_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y: Vec<Label> = (0..80)
            .map(|i| if i < 40 { Label::Benign } else { Label::Malignant })
            .collect();
        let x: Vec<FeatureVector> = y
            .iter()
            .map(|l| {
                let shift = if l.is_positive() { 0.8 } else { -0.8 };
                FeatureVector(std::array::from_fn(|_| shift + rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let w = vec![1.0; 80];
        let run = train_logistic(
            &x,
            &y,
            &w,
            TrainConfig {
                learning_rate: 0.01,
                epochs: 300,
                seed: 0,
            },
        )
        .unwrap();
        for pair in run.losses.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
    }

    #[test]
    fn blowup_reports_epoch() {
        let x = vec![fv(1e200), fv(-1e200)];
        let y = vec![Label::Malignant, Label::Benign];
        let err = train_logistic(
            &x,
            &y,
            &[1.0, 1.0],
            TrainConfig {
                learning_rate: 1e200,
                epochs: 10,
                seed: 0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { .. }), "{err:?}");
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![fv(1.0), fv(2.0)];
        let y = vec![Label::Benign, Label::Benign];
        assert!(train_logistic(&x, &y, &[1.0, 1.0], TrainConfig::default()).is_err());
    }
}
