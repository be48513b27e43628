use super::GeometryError;

pub const DEFAULT_SMOOTH_ITERATIONS: usize = 10;
pub const DEFAULT_SMOOTH_STEP: f64 = 0.5;

/// Explicit-Euler diffusion of a per-vertex field over a neighbor graph.
///
/// Each iteration sets `f(v) <- (1 - step) f(v) + step * mean(f(N(v)))` with
/// uniform 1-ring weights. Vertices without neighbors keep their value.
pub fn smooth_vertex_field(
    adjacency: &[Vec<usize>],
    field: &[f64],
    iterations: usize,
    step: f64,
) -> Result<Vec<f64>, GeometryError> {
    if field.len() != adjacency.len() {
        return Err(GeometryError::FieldLength { expected: adjacency.len(), got: field.len() });
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(GeometryError::SmoothingStep(step));
    }
    let mut current = field.to_vec();
    let mut next = vec![0.0; field.len()];
    for _ in 0..iterations {
        for (v, neighbors) in adjacency.iter().enumerate() {
            next[v] = if neighbors.is_empty() {
                current[v]
            } else {
                let mean = neighbors.iter().map(|&u| current[u]).sum::<f64>() / neighbors.len() as f64;
                (1.0 - step) * current[v] + step * mean
            };
        }
        std::mem::swap(&mut current, &mut next);
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Vec<Vec<usize>> {
        vec![vec![1], vec![0, 2], vec![1]]
    }

    #[test]
    fn constant_field_is_a_fixed_point() {
        let out = smooth_vertex_field(&path3(), &[2.5; 3], 7, 0.3).unwrap();
        assert!(out.iter().all(|&x| (x - 2.5).abs() < 1e-15));
    }

    #[test]
    fn zero_iterations_is_identity() {
        let f = [0.1, -4.0, 9.0];
        assert_eq!(smooth_vertex_field(&path3(), &f, 0, 0.5).unwrap(), f);
    }

    #[test]
    fn one_full_step_on_a_path() {
        let out = smooth_vertex_field(&path3(), &[0.0, 3.0, 0.0], 1, 1.0).unwrap();
        assert_eq!(out, vec![3.0, 0.0, 3.0]);
    }

    #[test]
    fn isolated_vertex_is_left_alone() {
        let adj = vec![vec![1], vec![0], vec![]];
        let out = smooth_vertex_field(&adj, &[0.0, 1.0, 7.0], 3, 0.5).unwrap();
        assert_eq!(out[2], 7.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(smooth_vertex_field(&path3(), &[1.0], 1, 0.5).is_err());
        assert!(smooth_vertex_field(&path3(), &[1.0; 3], 1, 0.0).is_err());
        assert!(smooth_vertex_field(&path3(), &[1.0; 3], 1, 1.5).is_err());
    }

    #[test]
    fn mean_is_preserved_on_a_cycle() {
        let n = 12;
        let adj: Vec<Vec<usize>> = (0..n).map(|v| vec![(v + n - 1) % n, (v + 1) % n]).collect();
        let field: Vec<f64> = (0..n).map(|v| ((v * 7) % 5) as f64 - 1.3).collect();
        let out = smooth_vertex_field(&adj, &field, 25, 0.4).unwrap();
        let mean = |f: &[f64]| f.iter().sum::<f64>() / f.len() as f64;
        assert!((mean(&out) - mean(&field)).abs() < 1e-10);
    }
}
