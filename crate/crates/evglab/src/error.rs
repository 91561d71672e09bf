use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("curvature admissibility violated: {0}")]
    Geometry(String),
    #[error("quadrature did not converge on [{a:e}, {b:e}]")]
    Quadrature { a: f64, b: f64 },
    #[error("root bracket failure: {0}")]
    RootBracket(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
