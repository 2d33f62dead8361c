use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain specification: {0}")]
    Domain(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("coefficient field rejected: {0}")]
    Coefficient(String),

    #[error("law violation: {0}")]
    LawViolation(String),

    #[error("Newton iteration did not converge (last residual {residual:.3e}): {detail}")]
    NonConvergence { residual: f64, detail: String },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("cell Peclet number {peclet:.3} exceeds 2; refine the mesh")]
    Peclet { peclet: f64 },

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("degenerate Gram matrix: {0}")]
    Gram(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in {source_name} line {line}: {detail}")]
    Parse {
        source_name: String,
        line: usize,
        detail: String,
    },

    #[error("unusable artifacts:\n  {}", .0.join("\n  "))]
    Artifacts(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
