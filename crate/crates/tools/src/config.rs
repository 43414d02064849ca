//! Resolved run settings and flat `key=value` override files.
//!
//! Keys are dotted paths into [`RunConfig`], e.g. `seed=42`,
//! `pln.lambda=0.5`, `svm.gamma=0.02`, `synth.event_hr_drop.lo=60`.
//! Blank lines and lines starting with `#` are ignored.

use std::fs;
use std::path::Path;

use abd_core::ann::AnnTrainConfig;
use abd_core::pln::PlnConfig;
use abd_core::svm::SvmTrainConfig;
use abd_core::classifier::TrainConfigs;
use abd_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{ToolError, ToolResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    pub frame_len: usize,
    pub timing: bool,
    pub pln: PlnConfig,
    pub svm: SvmTrainConfig,
    pub ann: AnnTrainConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            jobs: 1,
            frame_len: 15,
            timing: false,
            pln: PlnConfig::default(),
            svm: SvmTrainConfig::default(),
            ann: AnnTrainConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn train_configs(&self) -> TrainConfigs {
        TrainConfigs {
            pln: self.pln,
            svm: self.svm,
            ann: self.ann,
        }
    }
}

pub fn parse_pairs(text: &str, source: &Path) -> ToolResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ToolError::Usage(format!("{}: line {} is not key=value", source.display(), i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_like(existing: &Value, raw: &str) -> Option<Value> {
    match existing {
        Value::Bool(_) => raw.parse::<bool>().ok().map(Value::Bool),
        Value::Number(n) if n.is_u64() => match raw.parse::<u64>() {
            Ok(v) => Some(Value::from(v)),
            Err(_) => raw.parse::<f64>().ok().map(Value::from),
        },
        Value::Number(_) => raw.parse::<f64>().ok().map(Value::from),
        Value::String(_) => Some(Value::String(raw.to_string())),
        Value::Null => {
            if raw == "null" || raw == "none" {
                Some(Value::Null)
            } else {
                raw.parse::<f64>().ok().map(Value::from)
            }
        }
        _ => None,
    }
}

/// Applies `pairs` in order; unknown keys and unparsable values are usage
/// errors.
pub fn apply_pairs(cfg: &RunConfig, pairs: &[(String, String)]) -> ToolResult<RunConfig> {
    let mut root = serde_json::to_value(cfg).map_err(|e| ToolError::Usage(e.to_string()))?;
    for (key, raw) in pairs {
        let mut slot = &mut root;
        for part in key.split('.') {
            slot = slot
                .get_mut(part)
                .ok_or_else(|| ToolError::Usage(format!("unknown config key {key:?}")))?;
        }
        *slot = parse_like(slot, raw).ok_or_else(|| ToolError::Usage(format!("bad value {raw:?} for {key:?}")))?;
    }
    serde_json::from_value(root).map_err(|e| ToolError::Usage(format!("config: {e}")))
}

pub fn apply_file(cfg: &RunConfig, path: &Path) -> ToolResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
    apply_pairs(cfg, &parse_pairs(&text, path)?)
}
