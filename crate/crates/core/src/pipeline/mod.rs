//! Subject-level stages: max-pooling of patch codes, boosted stumps,
//! evaluation metrics and cross-validation splits.

mod adaboost;
mod metrics;
mod pool;
mod split;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adaboost::{
    adaboost_score, adaboost_train, fit as adaboost_fit, StopReason, Stump, StumpEnsemble,
    DEFAULT_ROUNDS, ERROR_FLOOR, MODEL_HEADER,
};
pub use metrics::{auc, evaluate, Confusion, EvalReport};
pub use pool::{max_pool, PoolMode};
pub use split::{complement, kfold_split, nested_split, NestedSplit};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("a subject needs at least one patch to pool")]
    NoPatches,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("both classes must be present")]
    SingleClass,
    #[error("{} class has only {count} members, too few to stratify", if *positive { "positive" } else { "negative" })]
    ClassTooSmall { positive: bool, count: usize },
    #[error("non-finite feature or score")]
    NonFinite,
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("model file: {0}")]
    Format(String),
}

/// One subject's pooled feature vector and label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub pooled: Vec<f64>,
    /// `true` for the positive group (converters / patients).
    pub label: bool,
    pub group_tag: String,
}
