use std::io;
use std::path::{Path, PathBuf};

use hsc_core::{CodingError, GeometryError, MeshError, PatchError, PipelineError, SynthError};
use thiserror::Error;

/// Failures grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("input: {0}")]
    Input(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Input(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// Attach the offending file to an input-class error.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
            CliError::Numeric(m) => CliError::Numeric(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::SmoothingStep(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::Io(source) => CliError::Io { path: PathBuf::new(), source },
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PatchError> for CliError {
    fn from(e: PatchError) -> Self {
        match e {
            PatchError::Config(_) => CliError::Config(e.to_string()),
            PatchError::Dump { .. } => CliError::Input(e.to_string()),
            PatchError::EmptyMesh | PatchError::BadCenter(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<CodingError> for CliError {
    fn from(e: CodingError) -> Self {
        match e {
            CodingError::Config(_) | CodingError::TooFewSamples { .. } => CliError::Config(e.to_string()),
            CodingError::Format(_) | CodingError::Dimension { .. } | CodingError::NoSamples => {
                CliError::Input(e.to_string())
            }
            CodingError::NonFinite | CodingError::Infeasible { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) | PipelineError::ClassTooSmall { .. } => CliError::Config(e.to_string()),
            PipelineError::NonFinite => CliError::Numeric(e.to_string()),
            PipelineError::SingleClass | PipelineError::NoPatches | PipelineError::Dimension { .. } | PipelineError::Format(_) => {
                CliError::Input(e.to_string())
            }
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Config(_) => CliError::Config(e.to_string()),
            SynthError::Mesh(m) => m.into(),
            SynthError::Labels { .. } => CliError::Input(e.to_string()),
        }
    }
}
