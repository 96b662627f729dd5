//! Error type shared by the whole crate.
//!
//! Programmer errors (mixing fields from different grids, indexing out of
//! bounds) panic via assertions; everything that can go wrong with *data* —
//! malformed inputs, invalid parameters, solver failures — flows through
//! [`Error`] so callers can distinguish "your configuration is bad" from
//! "the iteration did not converge".

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can fail across grid construction, measure validation,
/// kernel parsing, solvers, and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported torus dimension {0}: this crate handles d = 1 and d = 2")]
    UnsupportedDimension(usize),

    #[error("invalid grid size {0}: need an even node count of at least 8 per axis")]
    InvalidGridSize(usize),

    #[error("value vector has length {got} but the grid has {expected} nodes")]
    LengthMismatch { got: usize, expected: usize },

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("negative evolution time {t}")]
    NegativeTime { t: f64 },

    #[error("parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density has mass {mass}, outside tolerance {tol} of 1")]
    NotNormalized { mass: f64, tol: f64 },

    #[error("density is negative at node {index} (value {value})")]
    NegativeDensity { index: usize, value: f64 },

    #[error(
        "density sits at or below the positivity floor on {fraction:.3}% of nodes \
         (more than the accepted 1%)"
    )]
    DegenerateDensity { fraction: f64 },

    #[error("cosine perturbation size {eps} outside the admissible open interval (0, 1/4)")]
    PerturbationOutOfRange { eps: f64 },

    #[error("mode index {k:?} is at or above the Nyquist frequency of an {n}-node grid")]
    ModeAboveNyquist { k: Vec<i64>, n: usize },

    #[error("kernel lists mode {k:?} (or its negation) more than once")]
    DuplicateKernelMode { k: Vec<i64> },

    #[error("{metric} is only available in dimension {supported}, grid has dimension {got}")]
    MetricUnsupported {
        metric: &'static str,
        supported: usize,
        got: usize,
    },

    #[error(
        "grid has {nodes} nodes; the bounded-Lipschitz linear program is capped at {max} \
         (use a coarser grid for this diagnostic)"
    )]
    LpTooLarge { nodes: usize, max: usize },

    #[error("bounded-Lipschitz linear program failed: {0}")]
    LpFailed(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    DidNotConverge {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("solution blew up at time step {step}: sup |u| = {sup:.3e} exceeds 1e6")]
    BlowUp { step: usize, sup: f64 },

    #[error(
        "density transport clipped {clipped:.3e} of mass at time step {step}, \
         above the 1e-6 failure threshold; refine the time step"
    )]
    ExcessiveClipping { step: usize, clipped: f64 },

    #[error("time step {dt:.3e} exceeds the stability cap {cap:.3e}")]
    TimeStepTooLarge { dt: f64, cap: f64 },

    #[error("{path}: malformed field file: {reason}")]
    BadFieldFile { path: String, reason: String },

    #[error("CSV line {line}: {reason}")]
    CsvParse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}
