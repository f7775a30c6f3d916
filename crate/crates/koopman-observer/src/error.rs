use thiserror::Error;

/// Everything that can go wrong across the pipeline, flattened into one enum so
/// the CLI can map errors onto its exit-code contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dictionary is invalid: {0}")]
    InvalidDictionary(String),

    #[error("data set is degenerate: {0}")]
    DegenerateData(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "dictionary Gram matrix is numerically singular (smallest eigenvalue {min_eig:.3e}); \
         the observables are too close to linearly dependent over the sampled domain"
    )]
    IllConditionedDictionary { min_eig: f64 },

    #[error("required data volume is unbounded: c_tilde = 0 admits no finite sample size")]
    UnboundedRequirement,

    #[error("synthesis problem is infeasible: {0}")]
    Infeasible(String),

    #[error("solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("simulation diverged: state norm exceeded {limit:.3e} at t = {t:.6}")]
    Diverged { t: f64, limit: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {msg}")]
    Csv { path: String, msg: String },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 0 success, 2 infeasible, 3 bad data or
    /// config, 4 numerical breakdown, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 2,
            Error::InvalidDictionary(_)
            | Error::DegenerateData(_)
            | Error::DimensionMismatch(_)
            | Error::InvalidArgument(_)
            | Error::IllConditionedDictionary { .. }
            | Error::UnboundedRequirement
            | Error::InsufficientData(_)
            | Error::ModelFormat(_)
            | Error::Config(_)
            | Error::Io { .. }
            | Error::Csv { .. } => 3,
            Error::SolverBreakdown(_) | Error::Diverged { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
