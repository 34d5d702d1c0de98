use std::path::Path;

use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cda_core::Error),
    #[error("io: {0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },
    #[error("{path}: {source}")]
    InFile {
        path: String,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn csv(err: csv::Error) -> Self {
        CliError::Invalid(format!("csv: {err}"))
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    /// Attaches a file path unless the error already names one.
    pub fn context(self, path: &Path) -> Self {
        match self {
            e @ (CliError::Io(_) | CliError::InFile { .. }) => e,
            e => CliError::InFile {
                path: path.display().to_string(),
                source: Box::new(e),
            },
        }
    }

    fn root(&self) -> &CliError {
        match self {
            CliError::InFile { source, .. } => source.root(),
            e => e,
        }
    }

    /// Short machine-readable class of the failure.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            CliError::Core(e) => match e {
                cda_core::Error::Capacity { .. } => "capacity",
                cda_core::Error::EmptyResult { .. } => "empty_result",
                cda_core::Error::Cycle { .. } => "cycle",
                cda_core::Error::Degenerate(_) => "degenerate",
                _ => "invalid_argument",
            },
            CliError::Io(_) => "io",
            CliError::Invalid(_) => "invalid_input",
            CliError::Config { .. } => "config",
            CliError::InFile { .. } => unreachable!(),
        }
    }

    /// Whether this is a usage problem (exit 1) rather than a runtime failure (exit 2).
    pub fn is_usage(&self) -> bool {
        matches!(self.root(), CliError::Config { .. })
    }

    pub fn to_json(&self) -> Value {
        let mut obj = json!({ "error": self.kind(), "message": self.to_string() });
        match self.root() {
            CliError::Core(cda_core::Error::Capacity {
                frontier,
                limit,
                depth,
                total,
            }) => {
                obj["frontier"] = json!(frontier);
                obj["limit"] = json!(limit);
                obj["depth"] = json!(depth);
                obj["total"] = json!(total);
            }
            CliError::Core(cda_core::Error::EmptyResult { depth, total }) => {
                obj["depth"] = json!(depth);
                obj["total"] = json!(total);
            }
            CliError::Config { pointer, .. } => {
                obj["pointer"] = json!(pointer);
            }
            _ => {}
        }
        obj
    }
}
