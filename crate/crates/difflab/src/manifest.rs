//! Run manifests: each command writes `manifest.json` into its output
//! directory recording the full configuration plus input and output
//! hashes. A manifest is sufficient to re-execute the run and verify
//! that the artifacts come out byte-identical.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cli::RunConfig;
use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    /// Relative to the run directory for outputs; as given for inputs.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub inputs: Vec<ArtifactRef>,
    pub outputs: Vec<ArtifactRef>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex::encode(hasher.finalize()))
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

/// Re-execute the manifest's command into `scratch` and verify that
/// every recorded artifact reproduces byte-identically.
pub fn reproduce(manifest_path: &Path, scratch: &Path) -> Result<()> {
    let manifest = RunManifest::load(manifest_path)?;
    for input in &manifest.inputs {
        let path = PathBuf::from(&input.path);
        if !path.exists() {
            return Err(Error::MissingInput(path));
        }
        let hash = sha256_file(&path)?;
        if hash != input.sha256 {
            return Err(Error::Numeric(format!(
                "input {} changed since the original run",
                input.path
            )));
        }
    }
    let outputs = crate::cli::execute(&manifest.config, scratch)?;
    for recorded in &manifest.outputs {
        let produced = outputs
            .iter()
            .find(|a| a.path == recorded.path)
            .ok_or_else(|| {
                Error::Numeric(format!("artifact {} was not reproduced", recorded.path))
            })?;
        if produced.sha256 != recorded.sha256 {
            return Err(Error::Numeric(format!(
                "artifact {} differs: {} vs {}",
                recorded.path, produced.sha256, recorded.sha256
            )));
        }
    }
    Ok(())
}
