use std::fmt;

/// A failed invocation. Displays as a single `key=value` line.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad command line.
    Usage(String),
    /// Unreadable, malformed or invariant-violating configuration.
    Config {
        origin: String,
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },
    /// Simulation or output failure.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error kind=usage message={:?}", one_line(m)),
            CliError::Config {
                origin,
                line,
                key,
                message,
            } => {
                write!(f, "error kind=config path={origin:?}")?;
                if let Some(l) = line {
                    write!(f, " line={l}")?;
                }
                if let Some(k) = key {
                    write!(f, " key={k}")?;
                }
                write!(f, " message={:?}", one_line(message))
            }
            CliError::Runtime(m) => write!(f, "error kind=runtime message={:?}", one_line(m)),
        }
    }
}

impl std::error::Error for CliError {}

impl From<distill_core::Error> for CliError {
    fn from(e: distill_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o: {e}"))
    }
}
