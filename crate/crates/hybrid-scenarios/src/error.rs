use thiserror::Error;

/// Failures of the scenario runner, split by exit code.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot parse config: {0}")]
    Parse(String),

    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),

    #[error("unknown scenario '{0}' (see `list`)")]
    UnknownScenario(String),

    #[error("scenario '{scenario}' failed: {source}")]
    Runtime {
        scenario: String,
        #[source]
        source: hybrid_core::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    /// Process exit code: 2 for configuration problems, 3 for solver or output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Parse(_) | ScenarioError::Invalid(_) | ScenarioError::UnknownScenario(_) => 2,
            ScenarioError::Runtime { .. } | ScenarioError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        ScenarioError::Io { path: path.as_ref().display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;
