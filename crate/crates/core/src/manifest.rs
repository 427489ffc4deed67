//! Reproducibility manifest written next to every output artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::sha256_hex;

/// Version of the on-disk artifact formats (datasets, ledgers, reports).
pub const FORMAT_VERSION: u32 = 1;
pub const FORMAT_VERSION_STR: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub format_version: u32,
    /// Digest of the fully resolved configuration, not of the file on disk,
    /// so flag and environment overrides are captured too.
    pub config_sha256: String,
    /// input path (as given) -> content digest
    pub inputs: BTreeMap<String, String>,
    pub created_unix: u64,
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

impl Manifest {
    pub fn new(config_text: &str, inputs: &[&Path]) -> Result<Manifest> {
        let mut digests = BTreeMap::new();
        for path in inputs {
            digests.insert(path.display().to_string(), digest_file(path)?);
        }
        Ok(Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            format_version: FORMAT_VERSION,
            config_sha256: sha256_hex(config_text.as_bytes()),
            inputs: digests,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    /// `dataset.jsonl` -> `dataset.jsonl.manifest.json`
    pub fn path_for(artifact: &Path) -> PathBuf {
        let mut name = artifact.as_os_str().to_os_string();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_for(&self, artifact: &Path) -> Result<()> {
        let path = Self::path_for(artifact);
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
