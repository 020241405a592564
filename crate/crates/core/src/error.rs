use thiserror::Error;

/// Errors produced anywhere in the discretization and solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-conforming mesh: {0}")]
    NonConforming(String),

    #[error("inverted element {elem}: {msg}")]
    InvertedElement { elem: usize, msg: String },

    #[error("non-physical state {state:?}: {msg}")]
    PhysicalState { state: Vec<f64>, msg: String },

    #[error("non-finite value in element {elem}, direction {dir}, line {line}")]
    NonFinite { elem: usize, dir: usize, line: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("singular preconditioner block in element {elem}")]
    SingularBlock { elem: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("numerical breakdown: {0}")]
    Breakdown(String),

    #[error("Newton diverged: residual grew from {initial:e} to {current:e}")]
    Divergence { initial: f64, current: f64 },

    #[error("step failure: {0}")]
    StepFailure(String),

    #[error("explicit integration blew up in stage {stage} at t = {t}")]
    BlowUp { stage: usize, t: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
