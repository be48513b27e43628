use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::solver::{cd_round, half_sq, prepare_input, residual};
use super::{sgd_dictionary_update, CodingError, Dictionary, SccConfig, SparseCode};
use crate::rng::rng_from_seed;

/// Quantities recorded around one training step (one sample, one epoch).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub sample: usize,
    /// `f_i(D_i, z_i^{k-1})`.
    pub f_before_cd: f64,
    /// `f_i(D_i, z_i^k)`.
    pub f_after_cd: f64,
    /// `g_i(D_i) = ½‖D_i z_i^k − x_i‖²`.
    pub g_before_sgd: f64,
    /// `g_i(D_{i+1})`.
    pub g_after_sgd: f64,
    pub code_l1: f64,
    /// `‖D_i‖_F²`, an upper bound on the squared spectral norm.
    pub lipschitz: f64,
    pub max_column_norm_sq: f64,
}

impl StepRecord {
    /// `f_i(D_{i+1}, z_i^k)`.
    pub fn f_after_sgd(&self, lambda: f64) -> f64 {
        self.g_after_sgd + lambda * self.code_l1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    /// `(1/n) Σ_i f_i(D_i^k, z_i^{k-1})`.
    pub mean_before: f64,
    /// `(1/n) Σ_i f_i(D_{i+1}^k, z_i^k)`.
    pub mean_after: f64,
}

/// Counts of steps that break one of the descent or feasibility properties.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagViolations {
    pub cd_steps: usize,
    pub sgd_steps: usize,
    pub epochs: usize,
    pub lipschitz_steps: usize,
    pub column_norm_steps: usize,
}

impl DiagViolations {
    pub fn is_clean(&self) -> bool {
        *self == DiagViolations::default()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDiag {
    pub lambda: f64,
    pub samples: usize,
    pub records: Vec<StepRecord>,
}

impl ConvergenceDiag {
    pub fn epoch_summaries(&self) -> Vec<EpochSummary> {
        if self.samples == 0 {
            return Vec::new();
        }
        self.records
            .chunks(self.samples)
            .map(|steps| {
                let n = steps.len() as f64;
                EpochSummary {
                    epoch: steps[0].epoch,
                    mean_before: steps.iter().map(|s| s.f_before_cd).sum::<f64>() / n,
                    mean_after: steps.iter().map(|s| s.f_after_sgd(self.lambda)).sum::<f64>() / n,
                }
            })
            .collect()
    }

    /// Checks every record against the per-step descent tolerance and every
    /// epoch against `epoch_tol`.
    pub fn violations(&self, step_tol: f64, epoch_tol: f64) -> DiagViolations {
        let mut v = DiagViolations::default();
        for s in &self.records {
            v.cd_steps += usize::from(s.f_after_cd > s.f_before_cd + step_tol);
            v.sgd_steps += usize::from(s.g_after_sgd > s.g_before_sgd + step_tol);
            v.lipschitz_steps += usize::from(s.lipschitz < s.max_column_norm_sq);
            v.column_norm_steps += usize::from(s.max_column_norm_sq > 1.0 + super::FEASIBILITY_SLACK);
        }
        v.epochs = self
            .epoch_summaries()
            .iter()
            .filter(|e| e.mean_after > e.mean_before + epoch_tol)
            .count();
        v
    }

    /// Plot-ready CSV, one row per step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "epoch,sample,f_before_cd,f_after_cd,g_before_sgd,g_after_sgd,code_l1,lipschitz,max_column_norm_sq\n",
        );
        for s in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                s.epoch,
                s.sample,
                s.f_before_cd,
                s.f_after_cd,
                s.g_before_sgd,
                s.g_after_sgd,
                s.code_l1,
                s.lipschitz,
                s.max_column_norm_sq
            ));
        }
        out
    }
}

/// Learns a `atoms`-column dictionary from `samples` by stochastic
/// coordinate coding.
///
/// The dictionary starts from `atoms` distinct samples picked with
/// `config.seed`, rescaled to unit norm. See [`train_from`] for the loop.
pub fn train<S: AsRef<[f64]>>(
    samples: &[S],
    atoms: usize,
    config: &SccConfig,
) -> Result<(Dictionary, ConvergenceDiag), CodingError> {
    config.validate()?;
    let prepared = prepare_all(samples, config)?;
    if atoms == 0 {
        return Err(CodingError::Config("atom count must be at least 1".into()));
    }
    if atoms > prepared.len() {
        return Err(CodingError::TooFewSamples { atoms, samples: prepared.len() });
    }
    let mut rng = rng_from_seed(config.seed);
    let picks = index::sample(&mut rng, prepared.len(), atoms);
    let init: Vec<&[f64]> = picks.iter().map(|i| prepared[i].as_slice()).collect();
    let dict = Dictionary::from_samples(&init)?;
    run(dict, &prepared, config)
}

/// Training loop from an explicit initial dictionary.
///
/// For each epoch `k` and each sample `i` (batch size one, ascending order
/// unless `shuffle` is set): one [`cd_update`](super::cd_update) round
/// warm-started from the code `z_i^{k-1}` kept from the previous epoch, then
/// one [`sgd_dictionary_update`]. Every step is recorded in the returned
/// diagnostics.
pub fn train_from<S: AsRef<[f64]>>(
    init: Dictionary,
    samples: &[S],
    config: &SccConfig,
) -> Result<(Dictionary, ConvergenceDiag), CodingError> {
    config.validate()?;
    let prepared = prepare_all(samples, config)?;
    if prepared[0].len() != init.dim() {
        return Err(CodingError::Dimension { expected: init.dim(), got: prepared[0].len() });
    }
    run(init, &prepared, config)
}

fn prepare_all<S: AsRef<[f64]>>(samples: &[S], config: &SccConfig) -> Result<Vec<Vec<f64>>, CodingError> {
    let first = samples.first().ok_or(CodingError::NoSamples)?;
    let dim = first.as_ref().len();
    if dim == 0 {
        return Err(CodingError::Config("samples must have at least one entry".into()));
    }
    samples
        .iter()
        .map(|s| {
            let s = s.as_ref();
            if s.len() != dim {
                return Err(CodingError::Dimension { expected: dim, got: s.len() });
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(CodingError::NonFinite);
            }
            Ok(prepare_input(s, config))
        })
        .collect()
}

fn run(
    mut dict: Dictionary,
    samples: &[Vec<f64>],
    config: &SccConfig,
) -> Result<(Dictionary, ConvergenceDiag), CodingError> {
    let n = samples.len();
    let lambda = config.lambda;
    dict.set_lambda(lambda);
    let mut codes = vec![SparseCode::zeros(dict.atoms()); n];
    let mut diag = ConvergenceDiag { lambda, samples: n, records: Vec::with_capacity(n * config.epochs) };
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = rng_from_seed(config.seed.wrapping_add(1));
    let mut z = vec![0.0; dict.atoms()];
    let mut support = Vec::new();

    for epoch in 1..=config.epochs {
        if config.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        for (step, &i) in order.iter().enumerate() {
            dict.set_position(epoch, step);
            let x = &samples[i];
            let prev = &codes[i];

            let mut r = residual(&dict, prev, x);
            let f_before_cd = half_sq(&r) + lambda * prev.l1();
            prev.write_dense(&mut z);
            cd_round(&dict, &mut z, &mut r, lambda, config.cd_support_passes, &mut support);
            let code = SparseCode::from_dense(&z);
            let code_l1 = code.l1();

            let lipschitz = dict.frobenius_sq();
            let max_column_norm_sq = dict.max_column_norm_sq();
            let sgd = sgd_dictionary_update(&mut dict, &code, x)?;
            // g_before is recomputed from scratch, so it doubles as the
            // post-CD fit without drift from the incremental residual.
            let f_after_cd = sgd.g_before + lambda * code_l1;

            diag.records.push(StepRecord {
                epoch,
                sample: i,
                f_before_cd,
                f_after_cd,
                g_before_sgd: sgd.g_before,
                g_after_sgd: sgd.g_after,
                code_l1,
                lipschitz,
                max_column_norm_sq,
            });
            codes[i] = code;
        }
    }
    dict.set_position(config.epochs, n);
    Ok((dict, diag))
}
