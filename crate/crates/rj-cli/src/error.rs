//! CLI-level errors and the exit-code contract:
//! 0 success, 1 usage/parse, 2 numerical accuracy, 3 validation failure.

use rj_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Config text problems; carries a 1-based line when known.
    Parse { line: Option<usize>, msg: String },
    /// Anything bubbling up from the engine.
    Core(CoreError),
    /// A validation check failed (cmd_validate only).
    Validation(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn parse(line: usize, msg: String) -> Self {
        CliError::Parse { line: Some(line), msg }
    }

    pub fn parse_plain(msg: String) -> Self {
        CliError::Parse { line: None, msg }
    }

    pub fn usage(msg: &str) -> Self {
        CliError::Core(CoreError::Usage(msg.into()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 1,
            CliError::Core(e) => match e {
                CoreError::Usage(_) | CoreError::Domain(_) | CoreError::Model(_) => 1,
                CoreError::Computation { .. }
                | CoreError::Accuracy { .. }
                | CoreError::Consistency { .. } => 2,
            },
            CliError::Validation(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse { line: Some(line), msg } => write!(f, "parse: line {line}: {msg}"),
            CliError::Parse { line: None, msg } => write!(f, "parse: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Validation(msg) => write!(f, "validation: {msg}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Parse { line: None, msg: format!("io: {e}") }
    }
}
