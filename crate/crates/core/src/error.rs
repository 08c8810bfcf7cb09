use thiserror::Error;

pub type Result<T> = std::result::Result<T, SolitonError>;

/// Failure modes shared by every module of the engine.
#[derive(Debug, Error)]
pub enum SolitonError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite sample at node {index} (r = {r})")]
    NonFinite { index: usize, r: f64 },

    #[error("grid of {nodes} nodes is too coarse for a {needed}-point stencil")]
    GridTooCoarse { nodes: usize, needed: usize },

    #[error("r = {r} is a critical point of the profile (|f'| = {slope:e} below the regularity threshold)")]
    CriticalPoint { r: f64, slope: f64 },

    #[error("degenerate metric at r = {r}: warp = {warp:e}")]
    DegenerateMetric { r: f64, warp: f64 },

    #[error("k = {k} is outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("dimension n = {0} is not supported (n >= 3 required)")]
    Dimension(usize),

    #[error("wrong case: expected {expected}, profile has {found}")]
    WrongCase { expected: &'static str, found: String },

    #[error("inconsistent closing: fiber scalar curvature {r_sigma} must be positive at a closing end")]
    InconsistentClosing { r_sigma: f64 },

    #[error("non-smooth closing: lim w/s = {limit} but smooth closing needs {expected}")]
    NonSmoothClosing { limit: f64, expected: f64 },

    #[error("quadrature did not converge on [{a}, {b}] (estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("root search failed: {0}")]
    Root(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl SolitonError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        SolitonError::InvalidInput(msg.into())
    }
}
