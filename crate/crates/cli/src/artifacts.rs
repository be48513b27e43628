//! On-disk layout of a run directory, atomic writes and stage manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::CliError;

/// Every artifact path under one output directory.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn subjects_dir(&self) -> PathBuf {
        self.root.join("subjects")
    }

    pub fn patches_dir(&self) -> PathBuf {
        self.root.join("patches")
    }

    pub fn patch_file(&self, subject: &str) -> PathBuf {
        self.patches_dir().join(format!("{subject}.csv"))
    }

    /// Labels of the sampled subjects, copied from the data directory.
    pub fn labels(&self) -> PathBuf {
        self.root.join("labels.csv")
    }

    pub fn dictionary(&self) -> PathBuf {
        self.root.join("dictionary.json")
    }

    pub fn convergence(&self) -> PathBuf {
        self.root.join("convergence.csv")
    }

    pub fn features(&self) -> PathBuf {
        self.root.join("features.json")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn predictions(&self) -> PathBuf {
        self.root.join("predictions.csv")
    }

    pub fn evaluation(&self) -> PathBuf {
        self.root.join("evaluation.json")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.csv")
    }

    pub fn manifest(&self, command: &str) -> PathBuf {
        self.root.join("manifests").join(format!("{command}.json"))
    }

    /// `path` relative to the root, with `/` separators, for manifests.
    pub fn relative(&self, path: &Path) -> String {
        let rel = path.strip_prefix(&self.root).unwrap_or(path);
        rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
    }
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Writes through a sibling temp file and a rename, so readers never see a
/// partial artifact.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files in `dir` with extension `ext`, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Subject id from a file name: the stem.
pub fn subject_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Provenance record written next to each stage's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub schema_version: u32,
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub stage_seed: Option<u64>,
    /// Relative path to SHA-256 of the file contents.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_time_secs: f64,
    /// Free-form stage facts (counts, diagnostics).
    pub notes: BTreeMap<String, serde_json::Value>,
}

/// Collects hashes while a stage runs, then writes the manifest.
pub struct ManifestBuilder<'a> {
    layout: &'a Layout,
    started: Instant,
    manifest: Manifest,
}

impl<'a> ManifestBuilder<'a> {
    pub fn new(layout: &'a Layout, command: &str, config: &RunConfig, stage_seed: Option<u64>) -> Self {
        ManifestBuilder {
            layout,
            started: Instant::now(),
            manifest: Manifest {
                command: command.into(),
                schema_version: SCHEMA_VERSION,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                config_sha256: config.digest(),
                seed: config.seed,
                stage_seed,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                wall_time_secs: 0.0,
                notes: BTreeMap::new(),
            },
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.manifest.inputs.insert(self.layout.relative(path), sha256_hex(bytes));
    }

    /// Reads `path`, records its hash and returns the contents.
    pub fn read_input(&mut self, path: &Path) -> Result<String, CliError> {
        let text = read_text(path)?;
        self.input(path, text.as_bytes());
        Ok(text)
    }

    /// Atomically writes `path` and records its hash.
    pub fn write_output(&mut self, path: &Path, contents: &[u8]) -> Result<(), CliError> {
        write_atomic(path, contents)?;
        self.manifest.outputs.insert(self.layout.relative(path), sha256_hex(contents));
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.manifest.notes.insert(key.into(), value.into());
    }

    pub fn finish(mut self) -> Result<Manifest, CliError> {
        self.manifest.wall_time_secs = self.started.elapsed().as_secs_f64();
        let path = self.layout.manifest(&self.manifest.command);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        write_atomic(&path, text.as_bytes())?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/out.txt");
        write_atomic(&path, b"hello").unwrap();
        write_atomic(&path, b"again").unwrap();
        assert_eq!(read_text(&path).unwrap(), "again");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_records_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let layout = Layout::new(dir.path());
        let mut b = ManifestBuilder::new(&layout, "test", &RunConfig::default(), Some(3));
        b.write_output(&layout.patch_file("s1"), b"x").unwrap();
        let m = b.finish().unwrap();
        assert!(m.outputs.contains_key("patches/s1.csv"));
        let back: Manifest = serde_json::from_str(&read_text(&layout.manifest("test")).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
