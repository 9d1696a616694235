use std::path::PathBuf;

/// Errors raised by the numerical toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field has mass outside the domain mask (max outside |u| = {outside:e}, max |u| = {max:e})")]
    MassOutsideMask { outside: f64, max: f64 },

    #[error("direct quadrature refused: {points} grid points exceeds the limit of {limit}")]
    OracleTooLarge { points: usize, limit: usize },

    #[error("zero field cannot be normalized")]
    ZeroField,

    #[error("test function annihilated by cutoffs: ||f_y||_p = {0:e}")]
    AnnihilatedTestFunction(f64),

    #[error("point {0:?} lies outside the computational box")]
    OutsideBox(Vec<f64>),

    #[error("no convergence after {iterations} iterations: {detail}")]
    NotConverged { iterations: usize, detail: String },

    #[error("iterate collapsed: L^p norm {0:e} too small to renormalize")]
    Collapse(f64),

    #[error("constraints infeasible: |‖u‖_p - 1| = {lp_residual:e}, |β(u) - a_r| = {barycenter_residual:e}")]
    Infeasible {
        lp_residual: f64,
        barycenter_residual: f64,
    },

    #[error("degree undefined: sample {0} maps onto the target")]
    HitsTarget(usize),

    #[error("inadequate sphere sampling: angular increment {increment} at sample {index} is not below pi")]
    UndersampledBoundary { index: usize, increment: f64 },

    #[error("need at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },

    #[error("malformed header in {path}: {detail}")]
    MalformedHeader { path: PathBuf, detail: String },

    #[error("dimension mismatch in {path}: {detail}")]
    DimensionMismatch { path: PathBuf, detail: String },

    #[error("truncated payload in {path}: expected {expected} values, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
