//! The run directory and its manifest.
//!
//! ```text
//! <out>/config.snapshot   effective configuration (TOML)
//! <out>/data/             prepared dataset containers
//! <out>/models/           serialized networks
//! <out>/reports/          design records, CSV and markdown
//! <out>/manifest.json     one entry per command run against the directory
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use condnet::data::sha256_hex;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const SNAPSHOT: &str = "config.snapshot";

/// Writes through a sibling temporary file and a rename, so readers never see
/// a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn fingerprint(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub command: String,
    pub seconds: f64,
    /// Exit status the command finished with.
    pub status: i32,
    /// Paths relative to the run directory (or as given) mapped to SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// Free-form remarks such as non-convergence notices.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Effective configuration of the most recent stage.
    pub config_snapshot: String,
    pub seeds: BTreeMap<String, u64>,
    pub stages: Vec<Stage>,
}

impl RunManifest {
    pub fn new(config_snapshot: String, seeds: BTreeMap<String, u64>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_snapshot,
            seeds,
            stages: Vec::new(),
        }
    }

    /// The manifest already in `dir`, if any.
    pub fn load(dir: &Path) -> Result<Option<Self>, CliError> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Other(e.to_string()))?;
        write_atomic(&dir.join(MANIFEST), text.as_bytes())
    }
}

/// Paths inside a run directory.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn data(&self, name: &str) -> PathBuf {
        self.root.join("data").join(name)
    }

    pub fn model(&self, name: &str) -> PathBuf {
        self.root.join("models").join(name)
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(name)
    }

    /// `path` relative to the root when it lies inside it.
    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.root).unwrap_or(path).display().to_string()
    }

    pub fn fingerprints(&self, paths: &[PathBuf]) -> Result<BTreeMap<String, String>, CliError> {
        paths.iter().map(|p| Ok((self.relative(p), fingerprint(p)?))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/file.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        assert!(RunManifest::load(dir.path()).unwrap().is_none());
        let mut m = RunManifest::new("seed = 1\n".into(), BTreeMap::from([("master".into(), 1)]));
        m.stages.push(Stage {
            command: "ingest".into(),
            seconds: 0.5,
            status: 0,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::from([("data/train.csds".into(), "ab".into())]),
            notes: vec![],
        });
        m.save(dir.path()).unwrap();
        assert_eq!(RunManifest::load(dir.path()).unwrap(), Some(m));
    }

    #[test]
    fn relative_paths() {
        let run = RunDir::new("/runs/x");
        assert_eq!(run.relative(&run.model("a.cshp")), "models/a.cshp");
        assert_eq!(run.relative(Path::new("/elsewhere/f")), "/elsewhere/f");
    }
}
