use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{ToolError, ToolResult};

/// Everything needed to re-run a command. Contains no timestamps so that
/// repeated runs produce identical files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub toolkit_version: String,
    pub rng: String,
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: &RunConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            argv: argv.to_vec(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: abd_core::rng::GENERATOR.to_string(),
            seed: config.seed,
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> ToolResult<()> {
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| ToolError::data(path, e.to_string()))?;
        bytes.push(b'\n');
        std::fs::write(path, bytes).map_err(|e| ToolError::io(path, e))
    }
}
