use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Data { path: String, message: String },

    #[error("training failed: {0}")]
    Training(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type ToolResult<T> = Result<T, ToolError>;

impl ToolError {
    pub fn data(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        ToolError::Data {
            path: path.as_ref().display().to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        ToolError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 training, 4 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::Usage(_) => 1,
            ToolError::Data { .. } => 2,
            ToolError::Training(_) => 3,
            ToolError::Io { .. } => 4,
        }
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> ToolError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ToolError::io(path, io),
        other => ToolError::data(path, format!("{other:?}")),
    }
}
