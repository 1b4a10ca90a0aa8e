use thiserror::Error;

/// Errors produced by the registry analytics core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed diagnosis code `{code}`: {reason}")]
    MalformedCode { code: String, reason: String },

    #[error("date ordering violated: {0}")]
    DateOrder(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rate undefined: population is zero")]
    UndefinedRate,

    #[error("case fatality undefined: incidence is zero")]
    UndefinedCaseFatality,

    #[error("age-band coverage incomplete: {0}")]
    Coverage(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("event table invariant violated: {0}")]
    InvalidEventTable(String),

    #[error("degenerate group: {0}")]
    DegenerateGroup(String),

    #[error("covariate encoding failed at row {row}, field {field}: {message}")]
    Encoding {
        row: usize,
        field: String,
        message: String,
    },

    #[error("design matrix has no observed events")]
    NoEvents,

    #[error("singular information matrix; suspect columns: {0:?}")]
    SingularHessian(Vec<String>),

    #[error("covariate profile invalid: {0}")]
    Profile(String),

    #[error("numerical computation failed: {0}")]
    Computation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad inputs or configuration rather than by
    /// the numerics themselves. Callers use this to pick process exit codes.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Computation(_) | Error::SingularHessian(_) | Error::NoEvents
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
