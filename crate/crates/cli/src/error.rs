use serde_json::json;

/// Exit codes: 2 usage, 3 numeric domain, 4 failed invariant or acceptance.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Invariant(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Numeric(_) => "numeric-domain",
            CliError::Invariant(_) => "invariant",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Numeric(m)
            | CliError::Invariant(m)
            | CliError::Io(m) => m,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.message(), "kind": self.kind(), "exit_code": self.exit_code() })
            .to_string()
    }
}

impl From<heatkernel_core::Error> for CliError {
    fn from(e: heatkernel_core::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
