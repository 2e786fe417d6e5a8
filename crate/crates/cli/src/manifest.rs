//! Run manifest: enough context to reproduce an output directory exactly.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::util::CliError;

#[derive(Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub subcommand: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub artifacts: Vec<String>,
    pub wall_clock_secs: f64,
}

pub struct ManifestBuilder {
    subcommand: String,
    seed: Option<u64>,
    config: serde_json::Value,
    artifacts: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, seed: Option<u64>, config: serde_json::Value) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            seed,
            config,
            artifacts: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn artifact(&mut self, path: &Path) {
        self.artifacts.push(path.display().to_string());
    }

    /// Write `manifest.json` into the output directory.
    pub fn write(self, dir: &Path) -> Result<(), CliError> {
        let manifest = RunManifest {
            schema_version: 1,
            subcommand: self.subcommand,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config: self.config,
            artifacts: self.artifacts,
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
        };
        smr_core::io::write_json(&dir.join("manifest.json"), &manifest).map_err(CliError::from)
    }
}
