use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} index {index} out of range (valid: {valid})")]
    IndexOutOfRange {
        what: &'static str,
        index: i64,
        valid: String,
    },

    #[error("NaN produced while evaluating {0}")]
    NotANumber(&'static str),

    #[error("random walk Hamiltonian is not normalized: total mass {mass}")]
    NotNormalized { mass: f64 },

    #[error("increment law has no mass: {0}")]
    EmptySupport(String),

    #[error("impossible bridge: cannot reach {end} from {start} in {steps} steps")]
    ImpossibleBridge { start: f64, end: f64, steps: usize },

    #[error("chain stuck: initial state has zero weight and no move escaped within one sweep")]
    StuckInitialization,

    #[error("coupled initial states are not ordered: {0}")]
    Unordered(String),

    #[error("determinant degeneracy for tau(k={k}, l={l}, n={n}): pivot product {detail}")]
    DeterminantDegeneracy {
        k: usize,
        l: usize,
        n: usize,
        detail: String,
    },

    #[error("enumeration guard exceeded: {count} single paths (limit {limit})")]
    FeasibilityGuard { count: usize, limit: usize },

    #[error("root bracket failure: residuals {lo_residual} at low end and {hi_residual} at high end")]
    BracketFailure { lo_residual: f64, hi_residual: f64 },

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("insufficient data: need {needed}, got {got} ({what})")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("outside defined region: {0}")]
    OutsideDefinedRegion(String),

    #[error("configuration mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
