use serde::{Deserialize, Serialize};

use super::CodingError;

/// Slack allowed on `‖d_j‖² ≤ 1`.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

pub const DICTIONARY_HEADER: &str = "HSCDICT 1";

/// An `m × t` dictionary with columns in the unit ball, plus the diagonal of
/// the accumulated code Hessian `H = Σ z zᵀ` that sets per-atom step sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary {
    dim: usize,
    atoms: usize,
    /// Column-major `dim × atoms`.
    columns: Vec<f64>,
    norms_sq: Vec<f64>,
    hessian_diag: Vec<f64>,
    lambda: f64,
    epoch: usize,
    within_epoch_index: usize,
}

impl Dictionary {
    /// Dictionary from column-major data. Every column must already be
    /// feasible.
    pub fn from_column_major(dim: usize, atoms: usize, columns: Vec<f64>) -> Result<Self, CodingError> {
        if dim == 0 || atoms == 0 {
            return Err(CodingError::Config("dictionary needs at least one row and one atom".into()));
        }
        if columns.len() != dim * atoms {
            return Err(CodingError::Dimension { expected: dim * atoms, got: columns.len() });
        }
        if columns.iter().any(|x| !x.is_finite()) {
            return Err(CodingError::NonFinite);
        }
        let mut d = Dictionary {
            dim,
            atoms,
            columns,
            norms_sq: vec![0.0; atoms],
            hessian_diag: vec![0.0; atoms],
            lambda: 0.0,
            epoch: 0,
            within_epoch_index: 0,
        };
        for j in 0..atoms {
            d.refresh_norm(j);
            if d.norms_sq[j] > 1.0 + FEASIBILITY_SLACK {
                return Err(CodingError::Infeasible { atom: j, norm_sq: d.norms_sq[j] });
            }
        }
        Ok(d)
    }

    /// Dictionary whose columns are the given vectors rescaled to unit norm.
    /// Zero vectors stay zero.
    pub fn from_samples<S: AsRef<[f64]>>(samples: &[S]) -> Result<Self, CodingError> {
        let dim = samples.first().map_or(0, |s| s.as_ref().len());
        let mut columns = Vec::with_capacity(dim * samples.len());
        for s in samples {
            let s = s.as_ref();
            if s.len() != dim {
                return Err(CodingError::Dimension { expected: dim, got: s.len() });
            }
            let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
            columns.extend(s.iter().map(|x| x * scale));
        }
        Dictionary::from_column_major(dim, samples.len(), columns)
    }

    /// Patch dimension `m`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Atom count `t`.
    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.dim..(j + 1) * self.dim]
    }

    pub(crate) fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.columns[j * self.dim..(j + 1) * self.dim]
    }

    pub fn column_major(&self) -> &[f64] {
        &self.columns
    }

    pub fn column_norm_sq(&self, j: usize) -> f64 {
        self.norms_sq[j]
    }

    pub fn max_column_norm_sq(&self) -> f64 {
        self.norms_sq.iter().copied().fold(0.0, f64::max)
    }

    /// `‖D‖_F²`, an upper bound on `‖D‖₂²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.norms_sq.iter().sum()
    }

    pub fn hessian_diag(&self) -> &[f64] {
        &self.hessian_diag
    }

    pub(crate) fn hessian_diag_mut(&mut self) -> &mut [f64] {
        &mut self.hessian_diag
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn within_epoch_index(&self) -> usize {
        self.within_epoch_index
    }

    pub(crate) fn set_lambda(&mut self, lambda: f64) {
        self.lambda = lambda;
    }

    pub(crate) fn set_position(&mut self, epoch: usize, within_epoch_index: usize) {
        self.epoch = epoch;
        self.within_epoch_index = within_epoch_index;
    }

    pub(crate) fn refresh_norm(&mut self, j: usize) {
        self.norms_sq[j] = self.column(j).iter().map(|x| x * x).sum();
    }

    pub fn is_feasible(&self) -> bool {
        self.norms_sq.iter().all(|&n| n <= 1.0 + FEASIBILITY_SLACK)
    }

    /// `out = D z` for a dense code.
    pub fn apply_dense(&self, z: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, &zj) in z.iter().enumerate() {
            if zj != 0.0 {
                axpy(zj, self.column(j), out);
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DictionaryFile::from(self)).expect("dictionary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CodingError> {
        let file: DictionaryFile =
            serde_json::from_str(text).map_err(|e| CodingError::Format(e.to_string()))?;
        if file.header != DICTIONARY_HEADER {
            return Err(CodingError::Format(format!(
                "expected header `{DICTIONARY_HEADER}`, found `{}`",
                file.header
            )));
        }
        let mut d = Dictionary::from_column_major(file.m, file.t, file.columns)?;
        if file.hessian_diag.len() != file.t {
            return Err(CodingError::Dimension { expected: file.t, got: file.hessian_diag.len() });
        }
        if file.hessian_diag.iter().any(|&h| !h.is_finite() || h < 0.0) {
            return Err(CodingError::Format("hessian diagonal must be finite and non-negative".into()));
        }
        d.hessian_diag = file.hessian_diag;
        d.lambda = file.lambda;
        d.epoch = file.epoch;
        d.within_epoch_index = file.within_epoch_index;
        Ok(d)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DictionaryFile {
    header: String,
    m: usize,
    t: usize,
    lambda: f64,
    epoch: usize,
    within_epoch_index: usize,
    columns: Vec<f64>,
    hessian_diag: Vec<f64>,
}

impl From<&Dictionary> for DictionaryFile {
    fn from(d: &Dictionary) -> Self {
        DictionaryFile {
            header: DICTIONARY_HEADER.to_string(),
            m: d.dim,
            t: d.atoms,
            lambda: d.lambda,
            epoch: d.epoch,
            within_epoch_index: d.within_epoch_index,
            columns: d.columns.clone(),
            hessian_diag: d.hessian_diag.clone(),
        }
    }
}

#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_become_unit_columns() {
        let d = Dictionary::from_samples(&[vec![3.0, 4.0], vec![0.0, 0.0], vec![0.0, -2.0]]).unwrap();
        assert_eq!((d.dim(), d.atoms()), (2, 3));
        assert!((d.column(0)[0] - 0.6).abs() < 1e-15 && (d.column(0)[1] - 0.8).abs() < 1e-15);
        assert_eq!(d.column(1), &[0.0, 0.0]);
        assert_eq!(d.column(2), &[0.0, -1.0]);
        assert!(d.is_feasible());
        assert!((d.frobenius_sq() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_infeasible_columns() {
        assert!(matches!(
            Dictionary::from_column_major(2, 1, vec![1.0, 0.5]),
            Err(CodingError::Infeasible { atom: 0, .. })
        ));
        assert!(Dictionary::from_column_major(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut d = Dictionary::from_samples(&[vec![0.1, 0.2, 0.3], vec![1.0 / 3.0, -2.0, 1e-300]]).unwrap();
        d.hessian_diag = vec![0.123456789012345, 7.0];
        d.set_lambda(0.1);
        d.set_position(3, 17);
        let back = Dictionary::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        let bad = d.to_json().replace("HSCDICT 1", "HSCDICT 2");
        assert!(matches!(Dictionary::from_json(&bad), Err(CodingError::Format(_))));
    }
}
