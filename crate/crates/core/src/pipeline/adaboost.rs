//! Discrete AdaBoost over decision stumps.

use serde::{Deserialize, Serialize};

use super::{PipelineError, SubjectRecord};

pub const MODEL_HEADER: &str = "HSCADA 1";
pub const DEFAULT_ROUNDS: usize = 100;
/// Floor on the weighted error used in `α = ½ ln((1 − ε)/ε)`.
pub const ERROR_FLOOR: f64 = 1e-10;

/// `h(x) = polarity` if `x[feature] > threshold`, else `-polarity`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub alpha: f64,
    /// Weighted training error when the stump was selected.
    pub weighted_error: f64,
}

impl Stump {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let p = f64::from(self.polarity);
        if x[self.feature] > self.threshold {
            p
        } else {
            -p
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    RoundLimit,
    /// A stump separated the weighted training set exactly.
    Perfect,
    /// No stump did better than chance; the model may have no rounds.
    NoWeakLearner,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StumpEnsemble {
    pub features: usize,
    pub rounds: Vec<Stump>,
    pub stop: StopReason,
}

impl StumpEnsemble {
    /// True when training found no usable stump; such a model scores every
    /// input 0.
    pub fn is_degenerate(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.features, "feature vector length");
        self.rounds.iter().map(|s| s.alpha * s.predict(x)).sum()
    }

    /// Positive class iff the margin is strictly positive.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.score(x) > 0.0
    }

    /// `Π_r 2 sqrt(ε_r (1 − ε_r))`, an upper bound on the training error.
    pub fn training_error_bound(&self) -> f64 {
        self.rounds
            .iter()
            .map(|s| 2.0 * (s.weighted_error * (1.0 - s.weighted_error)).sqrt())
            .product()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile { header: MODEL_HEADER.into(), model: self.clone() };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| PipelineError::Format(e.to_string()))?;
        if file.header != MODEL_HEADER {
            return Err(PipelineError::Format(format!(
                "expected header `{MODEL_HEADER}`, found `{}`",
                file.header
            )));
        }
        let bad = file.model.rounds.iter().any(|s| {
            s.feature >= file.model.features || !s.alpha.is_finite() || s.polarity.abs() != 1
        });
        if bad {
            return Err(PipelineError::Format("invalid stump in model".into()));
        }
        Ok(file.model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    header: String,
    #[serde(flatten)]
    model: StumpEnsemble,
}

/// `margin = Σ_r α_r h_r(x)`.
pub fn adaboost_score(model: &StumpEnsemble, x: &[f64]) -> f64 {
    model.score(x)
}

pub fn adaboost_train(records: &[SubjectRecord], rounds: usize) -> Result<StumpEnsemble, PipelineError> {
    let features: Vec<&[f64]> = records.iter().map(|r| r.pooled.as_slice()).collect();
    let labels: Vec<bool> = records.iter().map(|r| r.label).collect();
    fit(&features, &labels, rounds)
}

/// Runs up to `rounds` boosting rounds.
///
/// Each round takes the stump with the lowest weighted error over all
/// features, thresholds at midpoints between consecutive distinct values,
/// and both polarities (ties keep the first found). Training stops early
/// when the best error is 0 or no stump beats 0.5.
pub fn fit(features: &[&[f64]], labels: &[bool], rounds: usize) -> Result<StumpEnsemble, PipelineError> {
    if rounds == 0 {
        return Err(PipelineError::Config("boosting needs at least one round".into()));
    }
    if features.len() != labels.len() {
        return Err(PipelineError::Dimension { expected: labels.len(), got: features.len() });
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(PipelineError::SingleClass);
    }
    let dim = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(PipelineError::Dimension { expected: dim, got: bad.len() });
    }
    if features.iter().any(|f| f.iter().any(|x| !x.is_finite())) {
        return Err(PipelineError::NonFinite);
    }

    let n = labels.len();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let sorted: Vec<Vec<usize>> = (0..dim)
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| features[a][f].total_cmp(&features[b][f]));
            idx
        })
        .collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut model = StumpEnsemble { features: dim, rounds: Vec::new(), stop: StopReason::RoundLimit };

    for _ in 0..rounds {
        let Some(mut stump) = best_stump(features, labels, &weights, &sorted) else {
            model.stop = StopReason::NoWeakLearner;
            break;
        };
        if stump.weighted_error >= 0.5 {
            model.stop = StopReason::NoWeakLearner;
            break;
        }
        let eps = stump.weighted_error.max(ERROR_FLOOR);
        stump.alpha = 0.5 * ((1.0 - eps) / eps).ln();
        for i in 0..n {
            weights[i] *= (-stump.alpha * y[i] * stump.predict(features[i])).exp();
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        model.rounds.push(stump);
        if stump.weighted_error <= ERROR_FLOOR {
            model.stop = StopReason::Perfect;
            break;
        }
    }
    Ok(model)
}

fn best_stump(features: &[&[f64]], labels: &[bool], weights: &[f64], sorted: &[Vec<usize>]) -> Option<Stump> {
    let total_pos: f64 = weights.iter().zip(labels).filter(|(_, &l)| l).map(|(w, _)| w).sum();
    let total_neg: f64 = weights.iter().zip(labels).filter(|(_, &l)| !l).map(|(w, _)| w).sum();
    let mut best: Option<Stump> = None;
    for (f, order) in sorted.iter().enumerate() {
        let (mut pos_below, mut neg_below) = (0.0, 0.0);
        for k in 0..order.len() - 1 {
            let i = order[k];
            if labels[i] {
                pos_below += weights[i];
            } else {
                neg_below += weights[i];
            }
            let (lo, hi) = (features[i][f], features[order[k + 1]][f]);
            if lo == hi {
                continue;
            }
            let threshold = lo + 0.5 * (hi - lo);
            // +1 predicts positive above the threshold, -1 below it.
            let err_up = pos_below + (total_neg - neg_below);
            let err_down = neg_below + (total_pos - pos_below);
            for (polarity, err) in [(1i8, err_up), (-1i8, err_down)] {
                if best.is_none_or(|b| err < b.weighted_error) {
                    best = Some(Stump { feature: f, threshold, polarity, alpha: 0.0, weighted_error: err });
                }
            }
        }
    }
    best
}
