use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: row {line}: {msg}", path.display())]
    Validation {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: missing `# temperature_K:` header", .0.display())]
    MissingHeader(PathBuf),

    #[error("spectrum does not cover {0:.2} nm")]
    Coverage(f64),

    #[error("line fit did not converge within {0} iterations")]
    NonConvergence(usize),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("total emitted line area is zero")]
    ZeroArea,

    #[error("temperature {temperature} K is outside the tabulated range [{min}, {max}] K")]
    OutOfRange { temperature: f64, min: f64, max: f64 },

    #[error("adaptive quadrature did not converge on [{a}, {b}] nm")]
    Quadrature { a: f64, b: f64 },

    #[error("rate table has no entry for transition {upper}->{lower}")]
    MissingTransition { upper: usize, lower: usize },

    #[error("steady state is not unique: generator kernel has dimension {0}")]
    DegenerateKernel(usize),

    #[error("steady-state solve failed: {0}")]
    Solve(String),

    #[error("time evolution unstable: {0}")]
    Unstable(String),

    #[error("density matrix is not a steady state (relative balance residual {0:e})")]
    NotSteady(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
