use thiserror::Error;

/// Errors raised by the probability primitives, solvers and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("KL divergence is infinite: q[{index}] = 0 but p[{index}] > 0")]
    InfiniteDivergence { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input")]
    EmptyInput,

    #[error("class {class} has {count} member(s) in the batch; leave-one-out needs at least 2")]
    ClassTooSmall { class: usize, count: usize },

    #[error("undefined slope: beta = 0 has no tangent line")]
    UndefinedSlope,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
