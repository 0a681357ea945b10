use std::fmt;

use serde::Serialize;

/// Process exit status for a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    /// Bad input data, bad config, or a pipeline stage that could not proceed.
    Domain,
    /// Missing, unreadable, undecodable or unwritable files.
    Io,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Domain => 2,
            FailureKind::Io => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: FailureKind,
    pub message: String,
}

impl CliError {
    pub fn domain(message: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::Domain,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::Io,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// One-line JSON object written to stderr on failure.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.message,
            "kind": self.kind,
            "exit_code": self.exit_code(),
        })
        .to_string()
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        Self {
            kind: self.kind,
            message: format!("{what}: {}", self.message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<abcd_core::Error> for CliError {
    fn from(e: abcd_core::Error) -> Self {
        match e {
            abcd_core::Error::Io(_) => CliError::io(e.to_string()),
            _ => CliError::domain(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
