use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("{field} out of range: {constraint}")]
    OutOfRange { field: String, constraint: String },

    #[error("empty group {0} (groups are 1-based in scenario files)")]
    EmptyGroup(usize),

    #[error("invalid scenario: {0}")]
    Invalid(String),

    #[error("degenerate channel: user {user} has a zero-norm channel vector")]
    DegenerateChannel { user: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient fit data: {0}")]
    InsufficientFitData(String),

    #[error(
        "bounds_infeasible: {kind} rate bound of user {user} cannot be met \
         (row violation {violation:.3e} at the phase-one analytic center)"
    )]
    BoundsInfeasible {
        user: usize,
        kind: BoundKind,
        violation: f64,
    },

    #[error("infeasible grouping: {0}")]
    InfeasibleGrouping(String),

    #[error("scheme `{scheme}` is incompatible with this run: {reason}")]
    Incompatible { scheme: String, reason: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which side of a per-user sample-count bound a constraint row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Lower,
    Upper,
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundKind::Lower => f.write_str("lower"),
            BoundKind::Upper => f.write_str("upper"),
        }
    }
}

pub(crate) fn out_of_range(field: impl Into<String>, constraint: impl Into<String>) -> Error {
    Error::OutOfRange {
        field: field.into(),
        constraint: constraint.into(),
    }
}
