//! Stochastic coordinate coding (SCC).
//!
//! Each patch `x_i` is coded against the dictionary by solving
//! `min_z ½‖Dz − x_i‖² + λ‖z‖₁` with a few rounds of coordinate descent
//! (warm-started from the code it had in the previous epoch), after which
//! the atoms on the code's support take one projected SGD step whose
//! per-atom rate comes from the diagonal of `Σ z zᵀ`.

mod code;
mod dictionary;
mod refine;
mod sgd;
mod solver;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use code::{soft_threshold, SparseCode};
pub use dictionary::{Dictionary, DICTIONARY_HEADER, FEASIBILITY_SLACK};
pub use sgd::{sgd_dictionary_update, SgdStep};
pub use solver::{
    cd_update, encode, kkt_residual, objective_single, prepare_input, ENCODE_MAX_ROUNDS,
    ENCODE_TOLERANCE,
};
pub use train::{train, train_from, ConvergenceDiag, DiagViolations, EpochSummary, StepRecord};

#[derive(Debug, Error)]
pub enum CodingError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid coding config: {0}")]
    Config(String),
    #[error("no training samples")]
    NoSamples,
    #[error("{atoms} atoms requested but only {samples} samples to initialize from")]
    TooFewSamples { atoms: usize, samples: usize },
    #[error("atom {atom} has squared norm {norm_sq} > 1")]
    Infeasible { atom: usize, norm_sq: f64 },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("dictionary file: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SccConfig {
    pub lambda: f64,
    pub epochs: usize,
    /// Extra coordinate-descent passes restricted to the support after the
    /// full pass.
    pub cd_support_passes: usize,
    /// Scale every input to unit Euclidean norm before coding.
    pub normalize_inputs: bool,
    /// Reshuffle the sample order every epoch.
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for SccConfig {
    fn default() -> Self {
        SccConfig {
            lambda: 0.10,
            epochs: 10,
            cd_support_passes: 3,
            normalize_inputs: true,
            shuffle: false,
            seed: 0,
        }
    }
}

impl SccConfig {
    pub fn validate(&self) -> Result<(), CodingError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(CodingError::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.epochs == 0 {
            return Err(CodingError::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}
