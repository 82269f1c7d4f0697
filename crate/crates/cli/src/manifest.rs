use std::path::{Path, PathBuf};

use serde::Serialize;

use kinetic_ga::lab::report::write_json;
use kinetic_ga::Result;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Everything needed to reproduce a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub timestamp: String,
    pub seed: Option<u64>,
    pub config_path: Option<PathBuf>,
    pub config_hash: Option<String>,
    /// The config after defaults and the seed override were applied.
    pub resolved_config: Option<String>,
    pub files: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            seed: None,
            config_path: None,
            config_hash: None,
            resolved_config: None,
            files: Vec::new(),
        }
    }

    /// Records `files` relative to `dir` and writes the manifest there.
    pub fn write(mut self, dir: &Path, files: &[PathBuf]) -> Result<()> {
        self.files = files
            .iter()
            .map(|f| f.strip_prefix(dir).unwrap_or(f).to_path_buf())
            .collect();
        write_json(&dir.join(MANIFEST_NAME), &self)
    }
}
