use std::fmt;
use std::io;

#[derive(Debug)]
pub enum CliError {
    Core(majvote::Error),
    Io { path: String, source: io::Error },
    Usage(String),
}

impl CliError {
    pub fn io(path: &str, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.category(),
            CliError::Io { .. } => "io-error",
            CliError::Usage(_) => "usage",
        }
    }

    /// Input problems exit with 2, failures of a well-formed request with 1.
    pub fn exit_code(&self) -> u8 {
        match self.category() {
            "usage" | "odd-t-required" | "parse-error" | "invalid-spec" | "domain-error" | "io-error" => 2,
            _ => 1,
        }
    }

    /// `error[<category>]: <message>` on a single line.
    pub fn diagnostic(&self) -> String {
        let message = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", self.category(), message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
            CliError::Usage(msg) => f.write_str(msg),
        }
    }
}

impl From<majvote::Error> for CliError {
    fn from(e: majvote::Error) -> Self {
        CliError::Core(e)
    }
}
