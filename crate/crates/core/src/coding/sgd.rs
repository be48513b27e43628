use super::dictionary::{axpy, dot};
use super::solver::{check_dims, half_sq, residual};
use super::{CodingError, Dictionary, SparseCode};

/// Keeps `Σ_j η_j z_j²` strictly below one.
const STEP_CLAMP_MARGIN: f64 = 1e-9;

/// Fit term `g = ½‖Dz − x‖²` around one dictionary update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdStep {
    pub g_before: f64,
    pub g_after: f64,
}

/// Projected SGD step on the support columns of `dict`, in place.
///
/// `h_jj += z_j²` for every `j` in the support, then
/// `d_j ← P(d_j − η_j z_j (Dz − x))` with `η_j = min(1/h_jj, (1 − 1e-9)/‖z‖²)`
/// and `P` the rescale onto the unit ball. The cap on `η_j` makes the step a
/// guaranteed descent step for `g`. Columns outside the support and the
/// whole dictionary for `z = 0` are left untouched.
pub fn sgd_dictionary_update(
    dict: &mut Dictionary,
    z: &SparseCode,
    x: &[f64],
) -> Result<SgdStep, CodingError> {
    check_dims(dict, z, x)?;
    // r = x − Dz, the negated gradient direction shared by all columns.
    let r = residual(dict, z, x);
    let g_before = half_sq(&r);
    if z.is_zero() {
        return Ok(SgdStep { g_before, g_after: g_before });
    }
    let clamp = (1.0 - STEP_CLAMP_MARGIN) / z.norm_sq();
    for &(j, zj) in z.entries() {
        let h = &mut dict.hessian_diag_mut()[j];
        *h += zj * zj;
        assert!(*h > 0.0, "hessian entry of a support atom must be positive");
        let eta = (1.0 / *h).min(clamp);
        let col = dict.column_mut(j);
        axpy(eta * zj, &r, col);
        let norm_sq = dot(col, col);
        if norm_sq > 1.0 {
            let scale = 1.0 / norm_sq.sqrt();
            col.iter_mut().for_each(|v| *v *= scale);
        }
        dict.refresh_norm(j);
    }
    let g_after = half_sq(&residual(dict, z, x));
    Ok(SgdStep { g_before, g_after })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dict(rng: &mut ChaCha8Rng, m: usize, t: usize) -> Dictionary {
        let cols: Vec<Vec<f64>> =
            (0..t).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        Dictionary::from_samples(&cols).unwrap()
    }

    #[test]
    fn zero_code_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut d = random_dict(&mut rng, 4, 6);
        let before = d.clone();
        let step = sgd_dictionary_update(&mut d, &SparseCode::zeros(6), &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(d, before);
        assert_eq!(step.g_before, step.g_after);
    }

    #[test]
    fn only_support_columns_move() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut d = random_dict(&mut rng, 5, 7);
        let before = d.clone();
        let z = SparseCode::from_entries(7, vec![(3, 0.8)]).unwrap();
        sgd_dictionary_update(&mut d, &z, &[1.0, -1.0, 0.5, 0.0, 0.2]).unwrap();
        for j in 0..7 {
            assert_eq!(d.column(j) != before.column(j), j == 3, "column {j}");
        }
        assert!((d.hessian_diag()[3] - 0.64).abs() < 1e-15);
        assert!(d.hessian_diag().iter().enumerate().all(|(j, &h)| j == 3 || h == 0.0));
    }

    #[test]
    fn fit_term_never_increases_and_columns_stay_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut d = random_dict(&mut rng, 8, 12);
        for _ in 0..500 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dense: Vec<f64> = (0..12)
                .map(|_| if rng.random_bool(0.3) { rng.random_range(-2.0..2.0) } else { 0.0 })
                .collect();
            let z = SparseCode::from_dense(&dense);
            let before = d.hessian_diag().to_vec();
            let step = sgd_dictionary_update(&mut d, &z, &x).unwrap();
            assert!(step.g_after <= step.g_before + 1e-12, "{step:?}");
            assert!(d.is_feasible());
            assert!(d.hessian_diag().iter().zip(&before).all(|(a, b)| a >= b));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut d = random_dict(&mut rng, 3, 4);
        assert!(sgd_dictionary_update(&mut d, &SparseCode::zeros(4), &[1.0]).is_err());
        assert!(sgd_dictionary_update(&mut d, &SparseCode::zeros(5), &[1.0; 3]).is_err());
    }
}
