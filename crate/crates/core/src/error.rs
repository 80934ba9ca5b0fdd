use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix shape: {0}")]
    Shape(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("matrix is numerically singular (smallest eigenvalue of u†u is {smallest:.3e})")]
    SingularInput { smallest: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("site must be 1 or 2, got {0}")]
    BadSite(usize),

    #[error("G2 has a non-negligible imaginary part ({imag:.3e}); input is probably not unitary")]
    NonRealG2 { imag: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration became unstable at t = {t}: unitarity defect {defect:.3e}")]
    UnstableIntegration { t: f64, defect: f64 },

    #[error("config error{}: {message}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config { line: None, message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit status used by the CLI: 1 for configuration problems,
    /// 2 for numerical failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidParameter(_) | Error::BadSite(_) | Error::Shape(_) => 1,
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}
