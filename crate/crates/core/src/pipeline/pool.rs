use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::coding::SparseCode;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    /// Signed maximum; coordinates absent from a code count as 0.
    #[default]
    Max,
    /// Maximum of absolute values.
    AbsMax,
}

/// Per-atom maximum over a subject's patch codes.
pub fn max_pool(codes: &[SparseCode], atoms: usize, mode: PoolMode) -> Result<Vec<f64>, PipelineError> {
    if codes.is_empty() {
        return Err(PipelineError::NoPatches);
    }
    let mut pooled = vec![f64::NEG_INFINITY; atoms];
    let mut present = vec![0usize; atoms];
    for code in codes {
        if code.dim() != atoms {
            return Err(PipelineError::Dimension { expected: atoms, got: code.dim() });
        }
        for &(j, z) in code.entries() {
            let v = match mode {
                PoolMode::Max => z,
                PoolMode::AbsMax => z.abs(),
            };
            pooled[j] = pooled[j].max(v);
            present[j] += 1;
        }
    }
    // Any code missing atom j contributes an implicit zero.
    for (p, &count) in pooled.iter_mut().zip(&present) {
        if count < codes.len() {
            *p = p.max(0.0);
        }
    }
    Ok(pooled)
}
