//! Versioned JSON model files. Every float is written with 17 significant
//! digits so a saved model reloads bit-for-bit.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use abd_core::classifier::{TrainConfigs, TrainedModel};
use serde::{Deserialize, Serialize};

use crate::error::{ToolError, ToolResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub toolkit_version: String,
    pub frame_len: usize,
    pub seed: u64,
    pub configs: TrainConfigs,
    pub trained_on: Vec<String>,
    #[serde(flatten)]
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(model: TrainedModel, configs: TrainConfigs, frame_len: usize, seed: u64, trained_on: Vec<String>) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            frame_len,
            seed,
            configs,
            trained_on,
            model,
        }
    }
}

/// Pretty printer that writes every `f64` as `{:.16e}`.
struct Exact17(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for Exact17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_exact<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Exact17(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

pub fn save_model(file: &ModelFile, path: &Path) -> ToolResult<()> {
    let bytes = to_json_exact(file).map_err(|e| ToolError::data(path, e.to_string()))?;
    fs::write(path, bytes).map_err(|e| ToolError::io(path, e))
}

pub fn parse_model(text: &str, source: &Path) -> ToolResult<ModelFile> {
    let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| ToolError::data(source, e.to_string()))?;
    match raw.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(v) => return Err(ToolError::data(source, format!("unsupported format_version {v} (expected {FORMAT_VERSION})"))),
        None => return Err(ToolError::data(source, "missing format_version")),
    }
    serde_json::from_value(raw).map_err(|e| ToolError::data(source, e.to_string()))
}

pub fn load_model(path: &Path) -> ToolResult<ModelFile> {
    let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
    parse_model(&text, path)
}
