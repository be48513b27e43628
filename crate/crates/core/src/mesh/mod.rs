//! Triangle meshes carrying a Klein-disk parameterization and one TBM value
//! per vertex.

mod hsm;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::DiskPoint;

pub use hsm::{load_surface, parse_surface, save_surface, write_surface};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no vertices")]
    Empty,
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("face {face} repeats a vertex index")]
    DegenerateFace { face: usize },
    #[error("mesh is not connected ({components} components)")]
    Disconnected { components: usize },
    #[error("vertex {vertex} has parameter ({u}, {v}) outside the open unit disk")]
    ParamOutsideDisk { vertex: usize, u: f64, v: f64 },
    #[error("vertex {vertex} has a non-finite coordinate or TBM value")]
    NonFinite { vertex: usize },
    #[error("field has {got} values but the mesh has {expected} vertices")]
    FieldLength { expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: Box<MeshError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub position: [f64; 3],
    pub param: DiskPoint,
    pub tbm: f64,
}

/// A connected triangle mesh with sorted, symmetric vertex adjacency.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSurface {
    vertices: Vec<VertexRecord>,
    faces: Vec<[usize; 3]>,
    adjacency: Vec<Vec<usize>>,
}

impl ParamSurface {
    pub fn build(vertices: Vec<VertexRecord>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if vertices.is_empty() {
            return Err(MeshError::Empty);
        }
        for (i, v) in vertices.iter().enumerate() {
            let finite = v.position.iter().all(|x| x.is_finite()) && v.tbm.is_finite();
            if !finite || !v.param.u.is_finite() || !v.param.v.is_finite() {
                return Err(MeshError::NonFinite { vertex: i });
            }
            if !v.param.is_inside() {
                return Err(MeshError::ParamOutsideDisk { vertex: i, u: v.param.u, v: v.param.v });
            }
        }
        let n = vertices.len();
        let mut adjacency = vec![Vec::new(); n];
        for (f, face) in faces.iter().enumerate() {
            if let Some(&index) = face.iter().find(|&&i| i >= n) {
                return Err(MeshError::IndexOutOfRange { face: f, index, count: n });
            }
            let [a, b, c] = *face;
            if a == b || b == c || a == c {
                return Err(MeshError::DegenerateFace { face: f });
            }
            for (x, y) in [(a, b), (b, c), (c, a)] {
                adjacency[x].push(y);
                adjacency[y].push(x);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let components = count_components(&adjacency);
        if components != 1 {
            return Err(MeshError::Disconnected { components });
        }
        Ok(ParamSurface { vertices, faces, adjacency })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[VertexRecord] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn neighbors(&self, v: VertexId) -> &[usize] {
        &self.adjacency[v.0]
    }

    pub fn param(&self, v: usize) -> DiskPoint {
        self.vertices[v].param
    }

    pub fn tbm(&self, v: usize) -> f64 {
        self.vertices[v].tbm
    }

    pub fn tbm_field(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.tbm).collect()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.0 < self.vertices.len()
    }

    /// Same mesh with the per-vertex TBM values replaced.
    pub fn with_tbm(&self, field: &[f64]) -> Result<Self, MeshError> {
        if field.len() != self.len() {
            return Err(MeshError::FieldLength { expected: self.len(), got: field.len() });
        }
        if let Some(vertex) = field.iter().position(|x| !x.is_finite()) {
            return Err(MeshError::NonFinite { vertex });
        }
        let mut out = self.clone();
        for (v, &value) in out.vertices.iter_mut().zip(field) {
            v.tbm = value;
        }
        Ok(out)
    }

    /// See [`bfs_two_ring`].
    pub fn two_ring(&self, center: VertexId) -> Vec<VertexId> {
        bfs_two_ring(&self.adjacency, center)
    }
}

fn count_components(adjacency: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; adjacency.len()];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..adjacency.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &u in &adjacency[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    components
}

/// Center, then its 1-ring, then the vertices two BFS levels away.
///
/// Each level is emitted in ascending vertex order and no vertex appears
/// twice.
pub fn bfs_two_ring(adjacency: &[Vec<usize>], center: VertexId) -> Vec<VertexId> {
    let c = center.0;
    let mut out = vec![center];
    let mut ring1: Vec<usize> = adjacency[c].iter().copied().filter(|&u| u != c).collect();
    ring1.sort_unstable();
    ring1.dedup();
    let mut ring2: Vec<usize> = ring1
        .iter()
        .flat_map(|&u| adjacency[u].iter().copied())
        .filter(|&w| w != c && ring1.binary_search(&w).is_err())
        .collect();
    ring2.sort_unstable();
    ring2.dedup();
    out.extend(ring1.into_iter().map(VertexId));
    out.extend(ring2.into_iter().map(VertexId));
    out
}
