use thiserror::Error;

/// Every failure the library reports. Variants carry enough context to
/// tell a configuration mistake apart from a numerical breakdown.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported on this surface: {0}")]
    Unsupported(String),
    #[error("point too close to a singularity: distance {dist:e} below {min:e}")]
    TooClose { dist: f64, min: f64 },
    #[error("flux vector violates quantization row {row}: defect {defect}")]
    Quantization { row: usize, defect: f64 },
    #[error("loop audit failed: defect {defect} on loop {index}")]
    AuditFailed { index: usize, defect: f64 },
    #[error("degree undefined: {0}")]
    Degree(String),
    #[error("solver did not converge: {what} (residual {residual:e})")]
    NoConvergence { what: String, residual: f64 },
    #[error("vortices annihilate: separation {separation:e}, no interior minimum")]
    Annihilation { separation: f64 },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidMesh(_)
                | Error::Parse { .. }
                | Error::InvalidInput(_)
                | Error::Unsupported(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
