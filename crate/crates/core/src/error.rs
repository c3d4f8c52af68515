use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {x} outside the domain ({lo}, {hi})")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("x+ = {x_plus} outside the range ({lo}, {hi}) of the null-ray map")]
    OutOfRange { x_plus: f64, lo: f64, hi: f64 },

    #[error("map is not increasing at x = {x}: f' = {derivative}")]
    NonMonotone { x: f64, derivative: f64 },

    #[error("evaluation at registered kink x = {0}")]
    AtKink(f64),

    #[error("numerical non-convergence in {context}: {detail}")]
    NonConvergence { context: &'static str, detail: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("table parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn no_convergence(context: &'static str, detail: impl Into<String>) -> Self {
        Error::NonConvergence { context, detail: detail.into() }
    }

    /// True for failures of an iterative or adaptive numerical method, as
    /// opposed to rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
