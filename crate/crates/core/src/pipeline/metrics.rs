use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / (self.positives() + self.negatives()) as f64
    }

    pub fn sensitivity(&self) -> f64 {
        self.tp as f64 / self.positives() as f64
    }

    pub fn specificity(&self) -> f64 {
        self.tn as f64 / self.negatives() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub acc: f64,
    pub sen: f64,
    pub spe: f64,
    pub auc: f64,
    pub confusion: Confusion,
}

impl EvalReport {
    pub fn from_confusion(confusion: Confusion, auc: f64) -> Self {
        EvalReport {
            acc: confusion.accuracy(),
            sen: confusion.sensitivity(),
            spe: confusion.specificity(),
            auc,
            confusion,
        }
    }
}

/// Classification metrics for margins `scores` against `labels`.
///
/// A score above 0 predicts the positive class. AUC is the Mann–Whitney
/// statistic with half credit for tied scores.
pub fn evaluate(scores: &[f64], labels: &[bool]) -> Result<EvalReport, PipelineError> {
    if scores.len() != labels.len() {
        return Err(PipelineError::Dimension { expected: labels.len(), got: scores.len() });
    }
    let mut c = Confusion { tp: 0, fn_: 0, tn: 0, fp: 0 };
    for (&s, &y) in scores.iter().zip(labels) {
        match (y, s > 0.0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
        }
    }
    Ok(EvalReport::from_confusion(c, auc(scores, labels)?))
}

/// Rank-sum AUC; tied scores share their average rank.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, PipelineError> {
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(PipelineError::SingleClass);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(PipelineError::NonFinite);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start..end (0-based) averaged, shifted to 1-based.
        let avg_rank = (start + end + 1) as f64 / 2.0;
        rank_sum += avg_rank * order[start..end].iter().filter(|&&i| labels[i]).count() as f64;
        start = end;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}
