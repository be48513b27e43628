//! Shared inputs for the benchmarks in `benches/`.

use hsc_core::{generate, Dictionary, ParamSurface, SynthConfig};

/// First synthetic subject on an `n`×`n` grid.
pub fn surface(n: usize) -> ParamSurface {
    let config = SynthConfig { subjects_per_class: 1, grid: [n, n], ..SynthConfig::default() };
    generate(&config).expect("valid synthetic config").swap_remove(0).surface
}

/// Unit-norm dictionary built from the first `atoms` of `samples`.
pub fn dictionary(samples: &[Vec<f64>], atoms: usize) -> Dictionary {
    Dictionary::from_samples(&samples[..atoms]).expect("distinct nonzero samples")
}

/// Patch features of `count` farthest-point centers on `surface`.
pub fn patch_samples(surface: &ParamSurface, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let config = hsc_core::SamplingConfig { target_patch_count: count, patch_dim: dim, ..Default::default() };
    let sampling = hsc_core::fpsbs_sample(surface, &config, 0).expect("sampling succeeds");
    hsc_core::patches::extract_patches(surface, &sampling.centers(), dim)
        .expect("patches extract")
        .into_iter()
        .map(|p| p.features)
        .collect()
}
