//! Command-line error type and its exit-code mapping.

use std::fmt;

use slingloiter_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, unparsable, or invalid configuration / data schema.
    Config(String),
    /// Anchor geometry rejected by the feasibility analysis.
    Degenerate(String),
    /// A planned cable force fell to the slack threshold.
    Slack(String),
    /// The simulation left the sane state range.
    Diverged(String),
    /// Filesystem trouble.
    Io(String),
}

impl CliError {
    /// Process exit code: 2 config/schema, 3 degenerate geometry, 4 slack
    /// cable, 5 diverged, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Slack(_) => 4,
            CliError::Diverged(_) => 5,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Degenerate(msg) => write!(f, "degenerate geometry: {msg}"),
            CliError::Slack(msg) => write!(f, "slack cable: {msg}"),
            CliError::Diverged(msg) => write!(f, "diverged: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::DegenerateGeometry(msg) => CliError::Degenerate(msg),
            CoreError::SlackCable { .. } | CoreError::SlackForce(_) => {
                CliError::Slack(e.to_string())
            }
            CoreError::Diverged { .. } => CliError::Diverged(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
