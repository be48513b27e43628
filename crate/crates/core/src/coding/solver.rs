//! Coordinate descent on the per-patch lasso
//! `f(z) = ½‖Dz − x‖² + λ‖z‖₁`.

use super::dictionary::{axpy, dot};
use super::refine;
use super::{soft_threshold, CodingError, Dictionary, SccConfig, SparseCode};

/// `encode` stops once no coordinate moves by more than this in a round.
pub const ENCODE_TOLERANCE: f64 = 1e-8;
pub const ENCODE_MAX_ROUNDS: usize = 200;

pub(crate) fn check_dims(dict: &Dictionary, z: &SparseCode, x: &[f64]) -> Result<(), CodingError> {
    if x.len() != dict.dim() {
        return Err(CodingError::Dimension { expected: dict.dim(), got: x.len() });
    }
    if z.dim() != dict.atoms() {
        return Err(CodingError::Dimension { expected: dict.atoms(), got: z.dim() });
    }
    Ok(())
}

/// `x − D z`.
pub(crate) fn residual(dict: &Dictionary, z: &SparseCode, x: &[f64]) -> Vec<f64> {
    let mut r = x.to_vec();
    for &(j, zj) in z.entries() {
        axpy(-zj, dict.column(j), &mut r);
    }
    r
}

pub(crate) fn half_sq(r: &[f64]) -> f64 {
    0.5 * dot(r, r)
}

/// `½‖Dz − x‖² + λ‖z‖₁`.
pub fn objective_single(dict: &Dictionary, z: &SparseCode, x: &[f64], lambda: f64) -> Result<f64, CodingError> {
    check_dims(dict, z, x)?;
    Ok(half_sq(&residual(dict, z, x)) + lambda * z.l1())
}

/// Exact minimization over coordinate `j`, keeping `r = x − Dz` in sync.
/// Returns the size of the move.
#[inline]
fn update_coordinate(dict: &Dictionary, j: usize, z: &mut [f64], r: &mut [f64], lambda: f64) -> f64 {
    let norm_sq = dict.column_norm_sq(j);
    let old = z[j];
    let new = if norm_sq > 0.0 {
        let d = dict.column(j);
        soft_threshold(dot(d, r) + norm_sq * old, lambda) / norm_sq
    } else {
        0.0
    };
    let delta = new - old;
    if delta != 0.0 {
        axpy(-delta, dict.column(j), r);
        z[j] = new;
    }
    delta.abs()
}

/// One full cyclic pass over every atom, then `support_passes` passes over
/// the atoms left nonzero. Returns the largest coordinate move.
pub(crate) fn cd_round(
    dict: &Dictionary,
    z: &mut [f64],
    r: &mut [f64],
    lambda: f64,
    support_passes: usize,
    support: &mut Vec<usize>,
) -> f64 {
    let mut max_move = 0.0f64;
    for j in 0..dict.atoms() {
        max_move = max_move.max(update_coordinate(dict, j, z, r, lambda));
    }
    support.clear();
    support.extend((0..z.len()).filter(|&j| z[j] != 0.0));
    for _ in 0..support_passes {
        for &j in support.iter() {
            max_move = max_move.max(update_coordinate(dict, j, z, r, lambda));
        }
    }
    max_move
}

/// One coordinate-descent round warm-started at `prev`.
///
/// A full cyclic pass over all atoms finds the support; `cd_support_passes`
/// further passes refine the values on it. Each coordinate step is an exact
/// minimizer, so the objective never increases. For unit-norm atoms the
/// step is `z_j ← h_λ(d_jᵀ(x − Dz) + z_j)`.
pub fn cd_update(
    dict: &Dictionary,
    prev: &SparseCode,
    x: &[f64],
    config: &SccConfig,
) -> Result<SparseCode, CodingError> {
    check_dims(dict, prev, x)?;
    let mut z = prev.to_dense();
    let mut r = residual(dict, prev, x);
    let mut support = Vec::new();
    cd_round(dict, &mut z, &mut r, config.lambda, config.cd_support_passes, &mut support);
    Ok(SparseCode::from_dense(&z))
}

/// The input as the solver sees it: scaled to unit norm when
/// `normalize_inputs` is set (zero vectors are left alone).
pub fn prepare_input(x: &[f64], config: &SccConfig) -> Vec<f64> {
    let mut out = x.to_vec();
    if config.normalize_inputs {
        let norm = dot(x, x).sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|v| *v /= norm);
        }
    }
    out
}

/// Sparse code of `x` against a frozen dictionary: [`cd_update`] rounds from
/// zero until no coordinate moves by more than [`ENCODE_TOLERANCE`], or
/// [`ENCODE_MAX_ROUNDS`] rounds, then an exact active-set finish when the
/// result is not yet optimal.
pub fn encode(dict: &Dictionary, x: &[f64], config: &SccConfig) -> Result<SparseCode, CodingError> {
    if x.len() != dict.dim() {
        return Err(CodingError::Dimension { expected: dict.dim(), got: x.len() });
    }
    let x = prepare_input(x, config);
    Ok(encode_prepared(dict, &x, config.lambda, config.cd_support_passes))
}

pub(crate) fn encode_prepared(dict: &Dictionary, x: &[f64], lambda: f64, support_passes: usize) -> SparseCode {
    let mut z = vec![0.0; dict.atoms()];
    let mut r = x.to_vec();
    let mut support = Vec::new();
    for _ in 0..ENCODE_MAX_ROUNDS {
        if cd_round(dict, &mut z, &mut r, lambda, support_passes, &mut support) < ENCODE_TOLERANCE {
            break;
        }
    }
    if refine::kkt_violation(dict, &z, &r, lambda) > refine::REFINE_TOLERANCE {
        refine::refine(dict, x, lambda, &mut z);
    }
    SparseCode::from_dense(&z)
}

/// Largest violation of the lasso optimality conditions
/// `d_jᵀ(x − Dz) ∈ λ ∂|z_j|`.
pub fn kkt_residual(dict: &Dictionary, z: &SparseCode, x: &[f64], lambda: f64) -> Result<f64, CodingError> {
    check_dims(dict, z, x)?;
    let r = residual(dict, z, x);
    let mut worst = 0.0f64;
    for j in 0..dict.atoms() {
        let g = dot(dict.column(j), &r);
        let zj = z.get(j);
        let v = if zj == 0.0 { (g.abs() - lambda).max(0.0) } else { (g - lambda * zj.signum()).abs() };
        worst = worst.max(v);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(lambda: f64) -> SccConfig {
        SccConfig { lambda, ..SccConfig::default() }
    }

    fn random_dict(rng: &mut ChaCha8Rng, m: usize, t: usize) -> Dictionary {
        let cols: Vec<Vec<f64>> =
            (0..t).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        Dictionary::from_samples(&cols).unwrap()
    }

    fn unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = dot(&v, &v).sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn objective_terms() {
        let d = Dictionary::from_samples(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let x = [0.3, -0.4];
        assert!((objective_single(&d, &SparseCode::zeros(2), &x, 0.1).unwrap() - 0.125).abs() < 1e-15);
        let z = SparseCode::from_dense(&x);
        assert!((objective_single(&d, &z, &x, 0.1).unwrap() - 0.07).abs() < 1e-15);
        assert!(objective_single(&d, &SparseCode::zeros(3), &x, 0.1).is_err());
        assert!(objective_single(&d, &z, &[1.0], 0.1).is_err());
    }

    #[test]
    fn objective_matches_separate_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = random_dict(&mut rng, 6, 9);
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let z = SparseCode::from_dense(&(0..9).map(|j| if j % 3 == 0 { rng.random_range(-1.0..1.0) } else { 0.0 }).collect::<Vec<_>>());
        let mut fit = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let dz: f64 = (0..9).map(|j| d.column(j)[i] * z.get(j)).sum();
            fit += (dz - xi).powi(2);
        }
        let l1: f64 = (0..9).map(|j| z.get(j).abs()).sum();
        let want = 0.5 * fit + 0.2 * l1;
        assert!((objective_single(&d, &z, &x, 0.2).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_first_pass_is_thresholded_correlation() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d = Dictionary::from_column_major(2, 2, vec![s, s, s, -s]).unwrap();
        let x = [0.9, 0.1];
        let c = SccConfig { cd_support_passes: 0, ..cfg(0.3) };
        let z = cd_update(&d, &SparseCode::zeros(2), &x, &c).unwrap();
        for j in 0..2 {
            let want = soft_threshold(dot(d.column(j), &x), 0.3);
            assert!((z.get(j) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn single_atom_converges_to_shrunk_value() {
        let x = [0.6, 0.8];
        let d = Dictionary::from_samples(&[x.to_vec()]).unwrap();
        let z = encode(&d, &x, &cfg(0.1)).unwrap();
        assert!((z.get(0) - 0.9).abs() < 1e-12);
        let z = cd_update(&d, &SparseCode::zeros(1), &x, &cfg(0.1)).unwrap();
        assert!((z.get(0) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_input_gives_zero_code() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = random_dict(&mut rng, 5, 8);
        assert!(encode(&d, &[0.0; 5], &cfg(0.1)).unwrap().is_zero());
    }

    #[test]
    fn cd_never_increases_the_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d = random_dict(&mut rng, 8, 12);
            let x = unit(&mut rng, 8);
            let mut z = SparseCode::zeros(12);
            let mut f = objective_single(&d, &z, &x, 0.05).unwrap();
            for _ in 0..5 {
                z = cd_update(&d, &z, &x, &cfg(0.05)).unwrap();
                let next = objective_single(&d, &z, &x, 0.05).unwrap();
                assert!(next <= f + 1e-12);
                f = next;
            }
        }
    }

    #[test]
    fn encode_satisfies_kkt_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let d = random_dict(&mut rng, 8, 12);
            let x = unit(&mut rng, 8);
            let z = encode(&d, &x, &cfg(0.1)).unwrap();
            assert!(kkt_residual(&d, &z, &x, 0.1).unwrap() <= 1e-6);
            assert_eq!(encode(&d, &x, &cfg(0.1)).unwrap(), z);
        }
    }

    #[test]
    fn atom_input_selects_that_atom() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // High-dimensional random atoms are nearly orthogonal.
        let d = random_dict(&mut rng, 400, 10);
        let x = d.column(4).to_vec();
        let z = encode(&d, &x, &cfg(0.1)).unwrap();
        assert!(z.support().any(|j| j == 4));
        assert!((z.get(4) - 0.9).abs() < 0.05);
    }

    #[test]
    fn zero_atoms_are_skipped() {
        let d = Dictionary::from_samples(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let z = encode(&d, &[1.0, 0.0], &cfg(0.1)).unwrap();
        assert_eq!(z.support().collect::<Vec<_>>(), vec![1]);
        assert!((z.get(1) - 0.9).abs() < 1e-12);
    }
}
