use serde::{Deserialize, Serialize};

/// Proximal operator of `lambda·|.|`.
#[inline]
pub fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

/// A sparse vector in `R^dim`, stored as its support.
///
/// Entries are strictly ascending by index and never hold an explicit zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseCode {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseCode {
    pub fn zeros(dim: usize) -> Self {
        SparseCode { dim, entries: Vec::new() }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &z)| z != 0.0)
            .map(|(j, &z)| (j, z))
            .collect();
        SparseCode { dim: values.len(), entries }
    }

    /// Builds a code from `(index, value)` pairs; zeros are dropped.
    ///
    /// Returns `None` if an index is out of range or repeated.
    pub fn from_entries(dim: usize, mut entries: Vec<(usize, f64)>) -> Option<Self> {
        entries.retain(|&(_, z)| z != 0.0);
        entries.sort_by_key(|&(j, _)| j);
        let ordered = entries.windows(2).all(|w| w[0].0 < w[1].0);
        let in_range = entries.last().is_none_or(|&(j, _)| j < dim);
        (ordered && in_range).then_some(SparseCode { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(j, _)| j)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.entries
            .binary_search_by_key(&j, |&(i, _)| i)
            .map_or(0.0, |k| self.entries[k].1)
    }

    pub fn l1(&self) -> f64 {
        self.entries.iter().map(|&(_, z)| z.abs()).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, z)| z * z).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.write_dense(&mut out);
        out
    }

    pub(crate) fn write_dense(&self, out: &mut [f64]) {
        out.fill(0.0);
        for &(j, z) in &self.entries {
            out[j] = z;
        }
    }
}
