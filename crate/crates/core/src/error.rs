use thiserror::Error;

/// Errors raised by model construction, agents, geometry kernels and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("action {action} is not admissible in context {context}")]
    InadmissibleAction { context: usize, action: usize },

    #[error("member index {index} out of range (class has {len} members)")]
    MemberIndex { index: usize, len: usize },

    #[error("context index {index} out of range ({len} contexts)")]
    ContextIndex { index: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("reward mean {0} lies outside [0, 1]")]
    MeanOutOfRange(f64),

    #[error("action grid is rank deficient: numerical rank {rank} < dimension {dim}")]
    RankDeficient { rank: usize, dim: usize },

    #[error("vector lies outside the span of the basis (residual norm {residual:e})")]
    OutsideSpan { residual: f64 },

    #[error("Gram matrix is singular")]
    SingularGram,

    #[error("link derivative is not positive at z = {at}")]
    NonIncreasingLink { at: f64 },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("optimistic subroutine exceeded its cap of {cap} descent steps")]
    IterationCap { cap: usize, phi_trace: Vec<f64> },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(invalid("delta", format!("{delta} is not in (0, 1)")))
    }
}
