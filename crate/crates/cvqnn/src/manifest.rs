//! Run manifests: enough to repeat a run exactly.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    /// Effective settings after merging flags, config file and defaults.
    pub config: Value,
    pub seed: Option<u64>,
    /// Dataset name to archive SHA-256.
    pub checksums: BTreeMap<String, String>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub metrics: Value,
}

pub fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

impl RunManifest {
    pub fn start(command: Vec<String>, config: Value, seed: Option<u64>) -> Self {
        Self {
            command,
            config,
            seed,
            checksums: BTreeMap::new(),
            artifacts: Vec::new(),
            started_unix_ms: unix_ms(),
            finished_unix_ms: 0,
            metrics: Value::Null,
        }
    }

    /// Stamps the end time and writes `dir/manifest.json` through a temporary
    /// file and a rename. Fails if a listed artifact is missing.
    pub fn finish(mut self, dir: &Path) -> CliResult<()> {
        if let Some(missing) = self.artifacts.iter().find(|a| !dir.join(a).is_file()) {
            return Err(CliError::data(format!("artifact {missing} was not written")));
        }
        self.artifacts.sort();
        self.artifacts.dedup();
        self.finished_unix_ms = unix_ms();
        let path = dir.join(MANIFEST_FILE);
        let tmp = dir.join(format!(".{MANIFEST_FILE}.tmp"));
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        std::fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
        std::fs::write(&tmp, text).map_err(|e| CliError::write(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| CliError::write(&path, e))
    }
}
