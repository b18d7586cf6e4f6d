use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Error, Debug)]
pub enum Error {
    #[error("need at least {required} points, got {found}")]
    Size { required: usize, found: usize },

    #[error("points {first} and {second} coincide (distance {distance:e})")]
    DegenerateSet {
        first: usize,
        second: usize,
        distance: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series diverges: beta = {beta} must exceed {dimension}")]
    DivergentSeries { beta: f64, dimension: f64 },

    #[error("coefficient {degree} became negative ({value:e}); kernel is not positive definite")]
    NotPositiveDefinite { degree: usize, value: f64 },

    #[error("collocation matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("centers are not unisolvent for harmonics of degree <= {degree} (rank {rank} < {required})")]
    NotUnisolvent {
        degree: usize,
        rank: usize,
        required: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no samples above the noise floor {floor:e}")]
    InsufficientSignal { floor: f64 },

    #[error("no cutoff on the grid satisfies the residual condition (best margin {best_margin:e} at Gamma = {best_gamma})")]
    NoCertificate { best_margin: f64, best_gamma: f64 },

    #[error("index {index} out of range for {len} basis functions")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
