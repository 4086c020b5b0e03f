use crate::krylov::SolveReport;

/// Errors produced by grid construction, sampling, assembly and time stepping.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(
        "invariant measure {value:e} is below the floor {floor:e} at point {index} (x = {x}, y = {y})"
    )]
    MeasurePositivity {
        index: usize,
        x: f64,
        y: f64,
        value: f64,
        floor: f64,
    },

    #[error("linear solver failed{}: {report}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    NonConvergence {
        report: SolveReport,
        step: Option<usize>,
    },

    #[error("matrix is numerically singular")]
    Singular,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("stencil error: {0}")]
    Stencil(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
