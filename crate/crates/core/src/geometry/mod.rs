//! Klein/Poincaré disk math, the face derivative map and its TBM, and graph
//! smoothing of per-vertex fields.
//!
//! Everything here is a pure function of its inputs.

mod disk;
mod jacobian;
mod smooth;

use thiserror::Error;

pub use disk::{
    klein_distance, klein_distance_unchecked, klein_to_poincare, poincare_to_klein, DiskPoint,
};
pub use jacobian::{
    derivative_map, surface_tbm, tbm_value, Jacobian2x2, PlanarTriangle, DEGENERATE_AREA,
};
pub use smooth::{smooth_vertex_field, DEFAULT_SMOOTH_ITERATIONS, DEFAULT_SMOOTH_STEP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({u}, {v}) is not strictly inside the unit disk")]
    OutsideDisk { u: f64, v: f64 },
    #[error("degenerate source triangle (signed area {area:e})")]
    DegenerateTriangle { area: f64 },
    #[error("map is not orientation preserving (det J = {det:e})")]
    Orientation { det: f64 },
    #[error("field has {got} values but the mesh has {expected} vertices")]
    FieldLength { expected: usize, got: usize },
    #[error("smoothing step {0} is outside (0, 1]")]
    SmoothingStep(f64),
    #[error("surfaces do not share connectivity")]
    ConnectivityMismatch,
}
