use snm::SnmError;

/// Exit codes: 2 validation, 3 capability refusal, 4 optimizer inconclusive, 1 I/O.
#[derive(Debug)]
pub enum CliError {
    Snm(SnmError),
    Usage(String),
    Inconclusive(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Snm(SnmError::CapabilityLimit(_)) => 3,
            CliError::Snm(SnmError::Io(_)) => 1,
            CliError::Snm(_) | CliError::Usage(_) => 2,
            CliError::Inconclusive(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Snm(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "invalid argument: {m}"),
            CliError::Inconclusive(m) => write!(f, "INCONCLUSIVE: {m}"),
        }
    }
}

impl From<SnmError> for CliError {
    fn from(e: SnmError) -> Self {
        CliError::Snm(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Snm(SnmError::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Snm(SnmError::Json(e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(e) => e.into(),
            other => CliError::Usage(format!("csv: {other:?}")),
        }
    }
}
