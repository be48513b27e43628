//! Synthetic cohorts: one shared parameterized grid mesh, per-subject noisy
//! TBM fields, and a multiplicative regional effect for the positive class.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{klein_distance_unchecked, DiskPoint};
use crate::mesh::{MeshError, ParamSurface, VertexRecord};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("labels file line {line}: {message}")]
    Labels { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub subjects_per_class: usize,
    /// Grid vertices along each parameter axis.
    pub grid: [usize; 2],
    /// The grid spans `[-extent, extent]²` of the Klein disk.
    pub extent: f64,
    pub effect_center: DiskPoint,
    /// Hyperbolic radius of the effect region.
    pub effect_radius: f64,
    /// Positive-class TBM inside the region is multiplied by `1 + effect_size`.
    pub effect_size: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            subjects_per_class: 60,
            grid: [30, 30],
            extent: 0.5,
            effect_center: DiskPoint::new_unchecked(0.15, -0.1),
            effect_radius: 0.25,
            effect_size: 0.5,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.to_string()));
        if self.subjects_per_class == 0 {
            return bad("subjects_per_class must be at least 1");
        }
        if self.grid[0] < 2 || self.grid[1] < 2 {
            return bad("grid needs at least 2 vertices per axis");
        }
        if !(self.extent > 0.0 && 2.0 * self.extent * self.extent < 1.0) {
            return bad("extent must keep the grid corners inside the unit disk");
        }
        if !self.effect_center.is_inside() {
            return bad("effect center must be inside the unit disk");
        }
        if !(self.effect_radius > 0.0 && self.effect_radius.is_finite()) {
            return bad("effect_radius must be positive");
        }
        if !(self.effect_size >= 0.0 && self.effect_size.is_finite()) {
            return bad("effect_size must be non-negative");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSubject {
    pub id: String,
    pub label: bool,
    pub surface: ParamSurface,
}

impl SynthSubject {
    pub fn group_tag(&self) -> &'static str {
        if self.label {
            "case"
        } else {
            "control"
        }
    }
}

/// Triangulated grid over `[-extent, extent]²` in Klein coordinates, lifted
/// onto a paraboloid cap in 3D, with TBM 1 everywhere.
pub fn base_mesh(config: &SynthConfig) -> Result<ParamSurface, SynthError> {
    config.validate()?;
    let [nx, ny] = config.grid;
    let e = config.extent;
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let u = -e + 2.0 * e * i as f64 / (nx - 1) as f64;
            let v = -e + 2.0 * e * j as f64 / (ny - 1) as f64;
            vertices.push(VertexRecord {
                position: [u, v, 0.5 * (u * u + v * v)],
                param: DiskPoint::new_unchecked(u, v),
                tbm: 1.0,
            });
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Ok(ParamSurface::build(vertices, faces)?)
}

/// Vertices of `surface` inside the effect region.
pub fn effect_mask(surface: &ParamSurface, config: &SynthConfig) -> Vec<bool> {
    surface
        .vertices()
        .iter()
        .map(|v| klein_distance_unchecked(v.param, config.effect_center) < config.effect_radius)
        .collect()
}

/// `2 · subjects_per_class` subjects alternating control/case. Subject `i`
/// draws from its own ChaCha stream, so subjects are independent of each
/// other and of generation order.
pub fn generate(config: &SynthConfig) -> Result<Vec<SynthSubject>, SynthError> {
    let base = base_mesh(config)?;
    let mask = effect_mask(&base, config);
    let noise = Normal::new(0.0, config.noise_sigma).map_err(|e| SynthError::Config(e.to_string()))?;
    (0..2 * config.subjects_per_class)
        .map(|i| {
            let label = i % 2 == 1;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            let field: Vec<f64> = mask
                .iter()
                .map(|&inside| {
                    let t = 1.0 + noise.sample(&mut rng);
                    if label && inside {
                        t * (1.0 + config.effect_size)
                    } else {
                        t
                    }
                })
                .collect();
            Ok(SynthSubject { id: format!("s{i:04}"), label, surface: base.with_tbm(&field)? })
        })
        .collect()
}

/// `subject_id,label` with label `1` for the positive class.
pub fn write_labels_csv<'a>(labels: impl IntoIterator<Item = (&'a str, bool)>) -> String {
    let mut out = String::from("subject_id,label\n");
    for (id, label) in labels {
        out.push_str(&format!("{id},{}\n", u8::from(label)));
    }
    out
}

pub fn read_labels_csv(text: &str) -> Result<Vec<(String, bool)>, SynthError> {
    let err = |line: usize, message: &str| SynthError::Labels { line, message: message.to_string() };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, "subject_id,label")) => {}
        _ => return Err(err(1, "expected header `subject_id,label`")),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(line, l)| {
            let (id, label) = l.split_once(',').ok_or_else(|| err(line, "expected two fields"))?;
            let label = match label {
                "1" => true,
                "0" => false,
                _ => return Err(err(line, "label must be 0 or 1")),
            };
            if id.is_empty() {
                return Err(err(line, "empty subject id"));
            }
            Ok((id.to_string(), label))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn small(effect_size: f64, seed: u64) -> SynthConfig {
        SynthConfig { subjects_per_class: 50, grid: [12, 12], effect_size, seed, ..SynthConfig::default() }
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    /// Per-subject mean TBM over the masked (or unmasked) vertices, by class.
    fn region_means(subjects: &[SynthSubject], mask: &[bool], inside: bool) -> (Vec<f64>, Vec<f64>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for s in subjects {
            let vals: Vec<f64> = s.surface.tbm_field().into_iter().zip(mask).filter(|(_, &m)| m == inside).map(|(t, _)| t).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            if s.label { pos.push(m) } else { neg.push(m) }
        }
        (pos, neg)
    }

    fn welch_p(a: &[f64], b: &[f64]) -> f64 {
        let (ma, va) = mean_var(a);
        let (mb, vb) = mean_var(b);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let se2 = va / na + vb / nb;
        let t = (ma - mb) / se2.sqrt();
        let dof = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
        2.0 * (1.0 - StudentsT::new(0.0, 1.0, dof).unwrap().cdf(t.abs()))
    }

    #[test]
    fn surfaces_are_valid_and_deterministic() {
        let a = generate(&small(0.5, 3)).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, generate(&small(0.5, 3)).unwrap());
        assert_ne!(a, generate(&small(0.5, 4)).unwrap());
        assert!(a.iter().all(|s| s.surface.len() == 144));
        assert_eq!(a.iter().filter(|s| s.label).count(), 50);
    }

    #[test]
    fn regional_effect_has_the_configured_size() {
        let config = small(0.5, 11);
        let subjects = generate(&config).unwrap();
        let mask = effect_mask(&subjects[0].surface, &config);
        assert!(mask.iter().any(|&m| m) && mask.iter().any(|&m| !m));
        let (pos, neg) = region_means(&subjects, &mask, true);
        let (mp, vp) = mean_var(&pos);
        let (mn, vn) = mean_var(&neg);
        let ratio = mp / mn;
        // Delta-method standard error of the ratio of means.
        let se = ratio * ((vp / pos.len() as f64) / (mp * mp) + (vn / neg.len() as f64) / (mn * mn)).sqrt();
        assert!((ratio - 1.5).abs() < 3.0 * se, "ratio {ratio} se {se}");

        let (pos, neg) = region_means(&subjects, &mask, false);
        assert!(welch_p(&pos, &neg) > 0.01);
    }

    #[test]
    fn zero_effect_gives_exchangeable_classes() {
        let config = small(0.0, 5);
        let subjects = generate(&config).unwrap();
        let mask = effect_mask(&subjects[0].surface, &config);
        let (pos, neg) = region_means(&subjects, &mask, true);
        assert!(welch_p(&pos, &neg) > 0.01);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = SynthConfig::default();
        for bad in [
            SynthConfig { grid: [1, 5], ..base.clone() },
            SynthConfig { extent: 0.8, ..base.clone() },
            SynthConfig { noise_sigma: -1.0, ..base.clone() },
            SynthConfig { effect_center: DiskPoint::new_unchecked(1.0, 0.0), ..base.clone() },
            SynthConfig { subjects_per_class: 0, ..base.clone() },
        ] {
            assert!(generate(&bad).is_err());
        }
    }

    #[test]
    fn labels_csv_round_trip() {
        let text = write_labels_csv([("a", true), ("b", false)]);
        assert_eq!(text, "subject_id,label\na,1\nb,0\n");
        assert_eq!(read_labels_csv(&text).unwrap(), vec![("a".to_string(), true), ("b".to_string(), false)]);
        assert!(read_labels_csv("id,label\n").is_err());
        assert!(read_labels_csv("subject_id,label\na,2\n").is_err());
    }
}
