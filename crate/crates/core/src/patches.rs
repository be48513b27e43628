//! Farthest point sampling with breadth-first search (FPSBS).
//!
//! Centers are picked by farthest-point sampling under the Klein-model
//! distance of the parameter domain. Each center yields a ring patch made of
//! its two BFS rings, and the patch's TBM values become a fixed-length
//! feature vector.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::klein_distance_unchecked;
use crate::mesh::{ParamSurface, VertexId};
use crate::rng::rng_from_seed;

#[derive(Debug, Error)]
pub enum PatchError {
    #[error("cannot sample patches on an empty mesh")]
    EmptyMesh,
    #[error("invalid sampling config: {0}")]
    Config(String),
    #[error("center {0} is not a vertex of the surface")]
    BadCenter(VertexId),
    #[error("patch dump line {line}: {message}")]
    Dump { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub target_patch_count: usize,
    pub patch_dim: usize,
    /// Hyperbolic length; sampling stops once the newest center's farthest
    /// vertex is this close.
    pub stop_radius: f64,
    pub require_full_coverage: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            target_patch_count: 2000,
            patch_dim: 300,
            stop_radius: 0.1,
            require_full_coverage: true,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), PatchError> {
        if self.target_patch_count == 0 {
            return Err(PatchError::Config("target_patch_count must be at least 1".into()));
        }
        if self.patch_dim == 0 {
            return Err(PatchError::Config("patch_dim must be at least 1".into()));
        }
        if self.stop_radius.is_nan() || self.stop_radius <= 0.0 {
            return Err(PatchError::Config("stop_radius must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingPatch {
    pub center: VertexId,
    /// Two-ring members in BFS order; `members[0]` is the center.
    pub members: Vec<VertexId>,
    pub features: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// The random first center.
    Seed,
    /// Argmax of distance to the selected set over all vertices.
    Farthest,
    /// Argmax of distance to the selected set over still-uncovered vertices.
    Coverage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterStep {
    pub center: VertexId,
    pub phase: Phase,
    /// Distance from the new center to the previously selected set
    /// (infinite for the first center).
    pub selection_distance: f64,
    /// Largest distance from any vertex to this center; used for the stop test.
    pub stop_radius: f64,
    /// Largest distance from any vertex to the selected set, this center
    /// included.
    pub covering_radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sampling {
    pub patches: Vec<RingPatch>,
    pub trace: Vec<CenterStep>,
}

impl Sampling {
    pub fn centers(&self) -> Vec<VertexId> {
        self.patches.iter().map(|p| p.center).collect()
    }

    /// Whether the covering radius never grew from one center to the next.
    pub fn radii_non_increasing(&self) -> bool {
        self.trace.windows(2).all(|w| w[1].covering_radius <= w[0].covering_radius)
    }
}

/// Runs FPSBS on `surface`.
///
/// The first center is drawn uniformly from `seed`. Each further center is
/// the vertex farthest from the selected set. Sampling stops once
/// `target_patch_count` patches exist or the newest center's stop radius
/// (its largest distance to any vertex) falls to `stop_radius`. With
/// `require_full_coverage`, centers are then added from the uncovered
/// vertices, farthest first, until every vertex belongs to some patch.
pub fn fpsbs_sample(
    surface: &ParamSurface,
    config: &SamplingConfig,
    seed: u64,
) -> Result<Sampling, PatchError> {
    config.validate()?;
    let n = surface.len();
    if n == 0 {
        return Err(PatchError::EmptyMesh);
    }
    let target = if config.target_patch_count > n {
        log::warn!(
            "requested {} patches on a {n}-vertex surface; clamping to {n}",
            config.target_patch_count
        );
        n
    } else {
        config.target_patch_count
    };

    let mut state = SamplerState::new(surface, config.patch_dim);
    let first = rng_from_seed(seed).random_range(0..n);
    let mut radius = state.add(first, Phase::Seed);
    while state.sampling.patches.len() < target && radius > config.stop_radius {
        match argmax(&state.to_set, |_| true) {
            Some(c) if state.to_set[c] > 0.0 => radius = state.add(c, Phase::Farthest),
            _ => break,
        }
    }
    if config.require_full_coverage {
        while state.uncovered > 0 {
            let c = argmax(&state.to_set, |v| !state.covered[v]).expect("an uncovered vertex exists");
            state.add(c, Phase::Coverage);
        }
    }
    Ok(state.sampling)
}

struct SamplerState<'a> {
    surface: &'a ParamSurface,
    patch_dim: usize,
    to_set: Vec<f64>,
    covered: Vec<bool>,
    uncovered: usize,
    sampling: Sampling,
}

impl<'a> SamplerState<'a> {
    fn new(surface: &'a ParamSurface, patch_dim: usize) -> Self {
        let n = surface.len();
        SamplerState {
            surface,
            patch_dim,
            to_set: vec![f64::INFINITY; n],
            covered: vec![false; n],
            uncovered: n,
            sampling: Sampling { patches: Vec::new(), trace: Vec::new() },
        }
    }

    /// Adds `center` and returns its stop radius.
    fn add(&mut self, center: usize, phase: Phase) -> f64 {
        let origin = self.surface.param(center);
        let selection_distance = self.to_set[center];
        let mut stop_radius = 0.0f64;
        for (v, record) in self.surface.vertices().iter().enumerate() {
            let d = klein_distance_unchecked(record.param, origin);
            stop_radius = stop_radius.max(d);
            if d < self.to_set[v] {
                self.to_set[v] = d;
            }
        }
        let covering_radius = self.to_set.iter().copied().fold(0.0, f64::max);
        let patch = patch_features_unchecked(self.surface, VertexId(center), self.patch_dim);
        for m in &patch.members {
            if !self.covered[m.0] {
                self.covered[m.0] = true;
                self.uncovered -= 1;
            }
        }
        self.sampling.patches.push(patch);
        self.sampling.trace.push(CenterStep {
            center: VertexId(center),
            phase,
            selection_distance,
            stop_radius,
            covering_radius,
        });
        stop_radius
    }
}

/// Index of the largest value among those passing `keep`; ties go to the
/// lowest index.
fn argmax(values: &[f64], keep: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in values.iter().enumerate() {
        if keep(i) && best.is_none_or(|b| x > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Ring patch at `center` with an `m`-long feature vector.
///
/// Members are ordered by increasing Klein distance from the center (ties by
/// vertex index); the first `m` TBM values are kept and short patches are
/// padded with the center's TBM value.
pub fn patch_features(surface: &ParamSurface, center: VertexId, m: usize) -> Result<RingPatch, PatchError> {
    if !surface.contains(center) {
        return Err(PatchError::BadCenter(center));
    }
    if m == 0 {
        return Err(PatchError::Config("patch_dim must be at least 1".into()));
    }
    Ok(patch_features_unchecked(surface, center, m))
}

fn patch_features_unchecked(surface: &ParamSurface, center: VertexId, m: usize) -> RingPatch {
    let members = surface.two_ring(center);
    let origin = surface.param(center.0);
    let mut ranked: Vec<(f64, usize)> = members
        .iter()
        .map(|v| (klein_distance_unchecked(origin, surface.param(v.0)), v.0))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut features: Vec<f64> = ranked.iter().take(m).map(|&(_, v)| surface.tbm(v)).collect();
    features.resize(m, surface.tbm(center.0));
    RingPatch { center, members, features }
}

/// Feature vectors for fixed centers, e.g. centers sampled once on a
/// template and reused across registered subjects.
pub fn extract_patches(
    surface: &ParamSurface,
    centers: &[VertexId],
    m: usize,
) -> Result<Vec<RingPatch>, PatchError> {
    centers.iter().map(|&c| patch_features(surface, c, m)).collect()
}

/// One row of the patch dump CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchRow {
    pub patch_id: usize,
    pub center: VertexId,
    pub member_count: usize,
    pub features: Vec<f64>,
}

/// CSV with columns `patch_id,center,member_count,f0..f{m-1}`.
pub fn write_patch_dump(patches: &[RingPatch]) -> String {
    let m = patches.first().map_or(0, |p| p.features.len());
    let mut out = String::from("patch_id,center,member_count");
    for j in 0..m {
        let _ = write!(out, ",f{j}");
    }
    out.push('\n');
    for (id, p) in patches.iter().enumerate() {
        let _ = write!(out, "{id},{},{}", p.center, p.members.len());
        for x in &p.features {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

pub fn read_patch_dump(text: &str) -> Result<Vec<PatchRow>, PatchError> {
    let err = |line: usize, message: String| PatchError::Dump { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty patch dump".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 3 || columns[..3] != ["patch_id", "center", "member_count"] {
        return Err(err(1, "expected header patch_id,center,member_count,f0,...".into()));
    }
    let m = columns.len() - 3;
    let mut rows = Vec::new();
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != m + 3 {
            return Err(err(line, format!("expected {} fields, found {}", m + 3, fields.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(line, format!("invalid integer `{s}`")));
        let features = fields[3..]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| err(line, format!("invalid number `{s}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(PatchRow {
            patch_id: int(fields[0])?,
            center: VertexId(int(fields[1])?),
            member_count: int(fields[2])?,
            features,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiskPoint;
    use crate::mesh::tests::{grid, record};
    use std::collections::BTreeSet;

    fn config(p: usize, m: usize) -> SamplingConfig {
        SamplingConfig { target_patch_count: p, patch_dim: m, ..SamplingConfig::default() }
    }

    #[test]
    fn one_vertex_mesh() {
        let s = ParamSurface::build(vec![record(0.1, 0.2)], vec![]).unwrap();
        let out = fpsbs_sample(&s, &config(5, 3), 1).unwrap();
        assert_eq!(out.patches.len(), 1);
        assert_eq!(out.patches[0].members, vec![VertexId(0)]);
        assert_eq!(out.patches[0].features, vec![1.0; 3]);
    }

    #[test]
    fn covers_a_small_grid() {
        let s = grid(5, 5, false);
        for seed in 0..10 {
            let out = fpsbs_sample(&s, &config(6, 7), seed).unwrap();
            let union: BTreeSet<VertexId> = out.patches.iter().flat_map(|p| p.members.iter().copied()).collect();
            assert_eq!(union.len(), 25);
            assert!(out.radii_non_increasing());
            assert!(out.patches.iter().all(|p| p.features.len() == 7));
        }
    }

    #[test]
    fn second_center_is_farthest_from_first() {
        let s = grid(9, 7, false);
        let out = fpsbs_sample(&s, &config(4, 5), 3).unwrap();
        let c1 = s.param(out.trace[0].center.0);
        let c2 = s.param(out.trace[1].center.0);
        let brute = (0..s.len())
            .map(|v| crate::geometry::klein_distance(s.param(v), c1).unwrap())
            .fold(0.0, f64::max);
        assert_eq!(crate::geometry::klein_distance(c2, c1).unwrap(), brute);
        assert_eq!(out.trace[1].phase, Phase::Farthest);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = grid(8, 8, false);
        let a = fpsbs_sample(&s, &config(10, 12), 42).unwrap();
        let b = fpsbs_sample(&s, &config(10, 12), 42).unwrap();
        assert_eq!(a.patches, b.patches);
    }

    #[test]
    fn clamps_patch_count_and_stops_on_radius() {
        let s = grid(3, 3, false);
        let out = fpsbs_sample(&s, &SamplingConfig { require_full_coverage: false, ..config(50, 4) }, 0).unwrap();
        assert!(out.patches.len() <= 9);
        // Every vertex of a tiny cluster is within the stop radius of the seed.
        let tiny: Vec<_> = (0..3).map(|i| record(0.01 * i as f64, 0.02 * (i % 2) as f64)).collect();
        let s = ParamSurface::build(tiny, vec![[0, 1, 2]]).unwrap();
        let out = fpsbs_sample(&s, &config(3, 4), 0).unwrap();
        assert_eq!(out.patches.len(), 1);
    }

    #[test]
    fn rejects_bad_config() {
        let s = grid(3, 3, false);
        assert!(fpsbs_sample(&s, &config(0, 3), 0).is_err());
        assert!(fpsbs_sample(&s, &config(3, 0), 0).is_err());
        let bad = SamplingConfig { stop_radius: 0.0, ..config(3, 3) };
        assert!(fpsbs_sample(&s, &bad, 0).is_err());
    }

    fn fan(k: usize) -> ParamSurface {
        // Center 0 with a ring of k neighbors at increasing radii.
        let mut v = vec![record(0.0, 0.0)];
        for i in 0..k {
            let a = i as f64 * std::f64::consts::TAU / k as f64;
            let r = 0.1 + 0.01 * i as f64;
            v.push(crate::mesh::VertexRecord {
                position: [0.0; 3],
                param: DiskPoint::new_unchecked(r * a.cos(), r * a.sin()),
                tbm: 1.0 + i as f64,
            });
        }
        v[0].tbm = 0.7;
        let faces = (0..k).map(|i| [0, 1 + i, 1 + (i + 1) % k]).collect();
        ParamSurface::build(v, faces).unwrap()
    }

    #[test]
    fn exact_fit_needs_no_padding() {
        let s = fan(6);
        let p = patch_features(&s, VertexId(0), 7).unwrap();
        assert_eq!(p.features, vec![0.7, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn long_patch_drops_farthest_members() {
        let s = fan(10);
        let p = patch_features(&s, VertexId(0), 6).unwrap();
        assert_eq!(p.members.len(), 11);
        // Radii grow with the ring index, so the last five ring vertices go.
        assert_eq!(p.features, vec![0.7, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn short_patch_is_padded_with_center_value() {
        let s = fan(4);
        let p = patch_features(&s, VertexId(0), 7).unwrap();
        assert_eq!(&p.features[5..], &[0.7, 0.7]);
        assert!(patch_features(&s, VertexId(99), 3).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let s = grid(6, 6, false);
        let out = fpsbs_sample(&s, &config(5, 4), 9).unwrap();
        let rows = read_patch_dump(&write_patch_dump(&out.patches)).unwrap();
        assert_eq!(rows.len(), out.patches.len());
        for (row, p) in rows.iter().zip(&out.patches) {
            assert_eq!(row.center, p.center);
            assert_eq!(row.member_count, p.members.len());
            assert_eq!(row.features, p.features);
        }
        assert!(read_patch_dump("a,b\n").is_err());
        assert!(read_patch_dump("patch_id,center,member_count,f0\n0,1,2\n").is_err());
    }
}
