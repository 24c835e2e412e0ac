use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// The CLI maps numerical failures (see [`Error::is_numeric`]) to exit code 3
/// and everything else, bad input and unreadable files included, to 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("loss `{0}` is not twice differentiable")]
    NotTwiceDifferentiable(&'static str),

    #[error("numeric error: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error(
        "solver did not converge after {iterations} iterations \
         (last objective {last_objective}, residual {residual:e})"
    )]
    NonConvergence {
        iterations: usize,
        last_objective: f64,
        residual: f64,
    },

    #[error("population minimizer diverges: {0}")]
    Divergence(String),

    #[error("render error: {0}")]
    Render(String),

    #[error("at lambda = {lambda}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("at gamma = {gamma}: {source}")]
    AtGamma {
        gamma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for errors caused by the numerics rather than the caller's input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric { .. }
            | Error::NonConvergence { .. }
            | Error::Divergence(_)
            | Error::Render(_) => true,
            Error::AtLambda { source, .. } | Error::AtGamma { source, .. } => source.is_numeric(),
            _ => false,
        }
    }

    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        if self.is_numeric() {
            3
        } else {
            2
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
