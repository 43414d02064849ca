//! File formats, the leave-one-out harness and the `abd` command line on top
//! of `abd-core`.

pub mod cli;
pub mod config;
mod error;
pub mod harness;
pub mod manifest;
pub mod model_io;
pub mod signal_io;

pub use error::{ToolError, ToolResult};
