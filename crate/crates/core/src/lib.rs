//! Hyperbolic stochastic coding of surface TBM features.
//!
//! The pipeline samples ring-shaped patches on a Klein-disk parameterized
//! surface ([`patches`]), learns an over-complete dictionary with stochastic
//! coordinate coding ([`coding`]), max-pools each subject's sparse codes and
//! classifies the pooled vectors with boosted decision stumps
//! ([`pipeline`]). [`synth`] produces labeled surfaces for end-to-end runs.

pub mod coding;
pub mod geometry;
pub mod mesh;
pub mod patches;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use coding::{
    cd_update, encode, objective_single, sgd_dictionary_update, soft_threshold, train,
    CodingError, ConvergenceDiag, Dictionary, SccConfig, SparseCode, StepRecord,
};
pub use geometry::{
    derivative_map, klein_distance, klein_to_poincare, poincare_to_klein, smooth_vertex_field,
    tbm_value, DiskPoint, GeometryError, Jacobian2x2, PlanarTriangle,
};
pub use mesh::{load_surface, save_surface, MeshError, ParamSurface, VertexId, VertexRecord};
pub use patches::{fpsbs_sample, patch_features, PatchError, RingPatch, Sampling, SamplingConfig};
pub use pipeline::{
    adaboost_score, adaboost_train, evaluate, kfold_split, max_pool, nested_split, EvalReport,
    PipelineError, PoolMode, StumpEnsemble, SubjectRecord,
};
pub use synth::{generate, SynthConfig, SynthError, SynthSubject};
