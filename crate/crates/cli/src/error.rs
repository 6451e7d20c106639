use std::fmt;

use wingqed_core::fdfd::FdfdError;
use wingqed_core::geometry::GeometryError;
use wingqed_core::mirror::MirrorError;
use wingqed_core::modes::ModeError;
use wingqed_core::qed::QedError;

/// Failure classes, ordered by exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorKind {
    Io,
    Config,
    Solver,
    Mirror,
    SteadyState,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Io => 1,
            ErrorKind::Config => 2,
            ErrorKind::Solver => 3,
            ErrorKind::Mirror => 4,
            ErrorKind::SteadyState => 5,
        }
    }

    /// Value of the CSV `status` column for a row that failed with this class.
    pub fn status(self) -> &'static str {
        match self {
            ErrorKind::Io => "io_error",
            ErrorKind::Config => "config_error",
            ErrorKind::Solver => "solver_error",
            ErrorKind::Mirror => "mirror_error",
            ErrorKind::SteadyState => "steady_state_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Io, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.status(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        Self::config(e.to_string())
    }
}

impl From<FdfdError> for CliError {
    fn from(e: FdfdError) -> Self {
        Self::new(ErrorKind::Solver, e.to_string())
    }
}

impl From<ModeError> for CliError {
    fn from(e: ModeError) -> Self {
        Self::new(ErrorKind::Solver, e.to_string())
    }
}

impl From<MirrorError> for CliError {
    fn from(e: MirrorError) -> Self {
        Self::new(ErrorKind::Mirror, e.to_string())
    }
}

impl From<QedError> for CliError {
    fn from(e: QedError) -> Self {
        let kind = match e {
            QedError::Parameter(_) | QedError::Dimension { .. } => ErrorKind::Config,
            QedError::StepFailure { .. } | QedError::Fit(_) => ErrorKind::Solver,
            QedError::SingularLiouvillian { .. }
            | QedError::Residual(_)
            | QedError::Vacuum(_)
            | QedError::Truncation { .. } => ErrorKind::SteadyState,
        };
        Self::new(kind, e.to_string())
    }
}
