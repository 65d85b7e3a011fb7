//! Output-directory manifest with content hashes, for reproducibility
//! checks: identical config + seed must yield identical hashes.

use std::path::{Path, PathBuf};

use extrabal::error::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
struct Artifact {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Debug, Default)]
pub struct Manifest {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        }
    }

    /// Registers a file already written under the output directory.
    pub fn add(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let rel = path
            .strip_prefix(&self.dir)
            .unwrap_or(path)
            .to_string_lossy()
            .to_string();
        self.artifacts.push(Artifact {
            path: rel,
            bytes: bytes.len() as u64,
            sha256: hex,
        });
        Ok(())
    }

    /// Writes `manifest.json` (artifacts sorted by path).
    pub fn write(mut self) -> Result<PathBuf> {
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let path = self.dir.join("manifest.json");
        let body = serde_json::json!({ "artifacts": self.artifacts });
        std::fs::write(&path, serde_json::to_string_pretty(&body).expect("serializable") + "\n")?;
        Ok(path)
    }
}
