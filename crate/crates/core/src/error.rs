use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation {dim} too small: tail weight {tail_weight:e} exceeds cap {cap:e}")]
    DimensionTooSmall { dim: usize, tail_weight: f64, cap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("operator is not bipartite")]
    NotBipartite,

    #[error("channel is not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("grid too coarse: refinement moved the maximizer by {moved:.4} (cell size {cell:.4})")]
    GridTooCoarse { moved: f64, cell: f64 },

    #[error("state lies outside the support of sigma (residual {0:e})")]
    OutsideSupport(f64),

    #[error("pseudo-inverse is sensitive to the support cutoff ({at_cutoff} vs {at_tenth})")]
    CutoffSensitive { at_cutoff: f64, at_tenth: f64 },

    #[error("no closed form for {0}")]
    NoClosedForm(String),

    #[error("linear program infeasible: the free points do not cover the support of the state")]
    Infeasible,

    #[error("feasible point rejected: min eigenvalue of t*sigma - rho is {0:e}")]
    Rejected(f64),

    #[error("displacement truncation unsound: unitarity deviation {0:e}")]
    TruncationUnsound(f64),

    #[error("witness is zero")]
    ZeroWitness,

    #[error("invalid discrimination task: {0}")]
    InvalidTask(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
