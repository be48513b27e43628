//! Run configuration: one JSON file drives every stage.

use std::path::{Path, PathBuf};

use hsc_core::{PoolMode, SamplingConfig, SccConfig, SynthConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory of `<subject>.hsm` surfaces plus `labels.csv`. When unset,
    /// `sample` reads the `subjects/` directory written by `synth`.
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths { data_dir: None, out_dir: PathBuf::from("hsc-out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Smoothing {
    /// Zero disables smoothing.
    pub iterations: usize,
    pub step: f64,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing { iterations: 0, step: hsc_core::geometry::DEFAULT_SMOOTH_STEP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Classifier {
    pub rounds: usize,
    /// Candidate round counts for validation-set selection under the nested
    /// protocol. Empty means `rounds` only.
    pub rounds_grid: Vec<usize>,
}

impl Default for Classifier {
    fn default() -> Self {
        Classifier { rounds: hsc_core::pipeline::DEFAULT_ROUNDS, rounds_grid: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Protocol {
    Nested { ratios: [usize; 3] },
    Kfold { k: usize },
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol::Kfold { k: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Column heading in the report CSV.
    pub name: String,
    pub seed: u64,
    pub paths: Paths,
    /// `seed` is ignored here too; see `scc`.
    pub synth: SynthConfig,
    pub smoothing: Smoothing,
    pub sampling: SamplingConfig,
    /// `seed` is ignored: every stage draws from its own stream of the
    /// root seed.
    pub scc: SccConfig,
    /// Dictionary size t.
    pub atoms: usize,
    pub pooling: PoolMode,
    pub classifier: Classifier,
    pub protocol: Protocol,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            name: "hsc".into(),
            seed: 0,
            paths: Paths::default(),
            synth: SynthConfig::default(),
            smoothing: Smoothing::default(),
            sampling: SamplingConfig::default(),
            scc: SccConfig::default(),
            atoms: 2000,
            pooling: PoolMode::default(),
            classifier: Classifier::default(),
            protocol: Protocol::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        // Check the version before the schema so old files get a clear message.
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        match raw.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => return Err(CliError::Config(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))),
            None => return Err(CliError::Config("missing schema_version".into())),
        }
        let config: RunConfig = serde_json::from_value(raw).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form, used to tie artifacts to a config.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", self.schema_version));
        }
        if self.name.is_empty() || self.name.contains([',', '\n', '"']) {
            return bad("name must be non-empty and free of commas, quotes and newlines".into());
        }
        self.synth.validate()?;
        self.sampling.validate()?;
        self.scc.validate()?;
        if self.atoms == 0 {
            return bad("atoms must be at least 1".into());
        }
        if self.smoothing.iterations > 0 && !(self.smoothing.step > 0.0 && self.smoothing.step <= 1.0) {
            return bad(format!("smoothing step {} is outside (0, 1]", self.smoothing.step));
        }
        if self.classifier.rounds == 0 || self.classifier.rounds_grid.contains(&0) {
            return bad("classifier rounds must be at least 1".into());
        }
        match self.protocol {
            Protocol::Kfold { k } if k < 2 => bad("k-fold needs k >= 2".into()),
            Protocol::Nested { ratios } if ratios.contains(&0) => bad("nested ratios must be positive".into()),
            _ => Ok(()),
        }
    }

    /// Root directory for a command: `--out` wins over the config.
    pub fn out_dir(&self, cli_out: Option<&Path>) -> PathBuf {
        cli_out.map_or_else(|| self.paths.out_dir.clone(), Path::to_path_buf)
    }
}
