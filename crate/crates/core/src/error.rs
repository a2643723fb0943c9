use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the disc constructions and the experiment layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structure evaluation failed at {point:?}: {reason}")]
    Evaluation { point: Vec<f64>, reason: String },

    #[error("point is off the manifold: |r(p)| = {residual:.3e} exceeds {tolerance:.1e}")]
    OffManifold { residual: f64, tolerance: f64 },

    #[error("holomorphic tangent space has complex dimension {found}, expected {expected} (non-generating point)")]
    NonGenerating { expected: usize, found: usize },

    #[error("not strictly pseudoconvex: minimal Levi form value {min_value:.3e} on the holomorphic tangent space")]
    NotPseudoconvex { min_value: f64 },

    #[error("strictification failed: Levi form of r + C r^2 has minimum {margin:.3e} at the cap C = {cap}")]
    StrictifyCap { cap: f64, margin: f64 },

    #[error("J(0) differs from the standard structure by {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("missing coordinate split: {0}")]
    MissingSplit(String),

    #[error("|Z|^2 = {norm_sq:.6} lies outside the foliation domain |Z| < {radius:.6} (N = {n_param})")]
    FoliationDomain { norm_sq: f64, radius: f64, n_param: f64 },

    #[error("J_st + J is singular at {point:?}")]
    SingularSum { point: Vec<f64> },

    #[error("endomorphism is not anti-linear: defect {defect:.3e} exceeds {tolerance:.1e}")]
    NotAntiLinear { defect: f64, tolerance: f64 },

    #[error("negative-frequency energy {energy:.3e} exceeds threshold {threshold:.3e}")]
    NotHolomorphic { energy: f64, threshold: f64 },

    #[error("signal is not real: max imaginary part {max_imag:.3e}")]
    NotReal { max_imag: f64 },

    #[error("disc leaves the structure domain: |f| = {norm:.4} > radius {radius:.4}")]
    RangeExcursion { norm: f64, radius: f64 },

    #[error("structure is outside the small-perturbation neighborhood: sup |J - J_st| = {distance:.3e} > {threshold:.3e}; use a smaller dilation delta")]
    OutsideNeighborhood { distance: f64, threshold: f64 },

    #[error("fixed-point iteration is not contracting at step {iteration} (distances {distances:?}); use a smaller dilation delta")]
    NonContraction { iteration: usize, distances: Vec<f64> },

    #[error("{what}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    MaxIterations { what: &'static str, iterations: usize, residual: f64 },

    #[error("Bishop iteration diverged at outer step {iteration} (boundary residual {residual:.3e}); use a smaller dilation delta")]
    BishopDivergence { iteration: usize, residual: f64 },

    #[error("rank decision is ill-conditioned: no singular value gap below {threshold:.1e} (singular values {singular_values:?})")]
    IllConditionedRank { singular_values: Vec<f64>, threshold: f64 },

    #[error("invalid quadric model: {0}")]
    InvalidModel(String),

    #[error("L0 violates the limit block pattern by {defect:.3e}: {detail}")]
    BlockPattern { defect: f64, detail: String },

    #[error("scenario precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
