//! Run manifests: command line, config hash, output checksums and a content
//! version derived from them.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    /// Hash over the sorted output names and hashes.
    pub content_version: String,
    /// Unix seconds; the only nondeterministic field.
    pub created_unix: u64,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn build(
        command: String,
        config_json: &str,
        seed: u64,
        dir: &Path,
        files: &[&str],
    ) -> Result<Self, CliError> {
        let mut outputs = Vec::with_capacity(files.len());
        for name in files {
            let path = dir.join(name);
            let bytes = fs::metadata(&path).map_err(|e| CliError::io(&path, e))?.len();
            outputs.push(OutputEntry {
                file: name.to_string(),
                sha256: sha256_file(&path)?,
                bytes,
            });
        }
        outputs.sort_by(|a, b| a.file.cmp(&b.file));
        let mut tree = String::new();
        for entry in &outputs {
            tree.push_str(&entry.file);
            tree.push(':');
            tree.push_str(&entry.sha256);
            tree.push('\n');
        }
        Ok(Self {
            command,
            config_sha256: sha256_hex(config_json.as_bytes()),
            seed,
            content_version: sha256_hex(tree.as_bytes()),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// Checks that a listed output still matches its recorded checksum.
    pub fn verify_output(&self, dir: &Path, name: &str) -> Result<bool, CliError> {
        match self.outputs.iter().find(|o| o.file == name) {
            None => Ok(false),
            Some(entry) => {
                let path = dir.join(name);
                if !path.exists() {
                    return Ok(false);
                }
                Ok(sha256_file(&path)? == entry.sha256)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn checksums_and_content_version_are_stable() {
        let dir = tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "x,y\n1,2\n").unwrap();
        fs::write(dir.path().join("b.csv"), "h\n0\n").unwrap();
        let m1 = RunManifest::build("cmd".into(), "{}", 7, dir.path(), &["a.csv", "b.csv"])
            .unwrap();
        let m2 = RunManifest::build("cmd".into(), "{}", 7, dir.path(), &["b.csv", "a.csv"])
            .unwrap();
        assert_eq!(m1.content_version, m2.content_version);
        assert!(m1.verify_output(dir.path(), "a.csv").unwrap());
        fs::write(dir.path().join("a.csv"), "tampered").unwrap();
        assert!(!m1.verify_output(dir.path(), "a.csv").unwrap());
    }
}
