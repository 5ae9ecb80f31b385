use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for {field}: {reason}")]
    InvalidValue { field: &'static str, reason: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid face index {index} (mesh has {count} faces)")]
    FaceIndex { index: usize, count: usize },

    #[error("structure '{0}' has no coverable faces")]
    NothingCoverable(String),

    #[error("invalid coverage path for '{id}': {reason}")]
    InvalidCoveragePath { id: String, reason: String },

    #[error("instance too large for exhaustive search: {n} nodes (max {max})")]
    TooLarge { n: usize, max: usize },

    #[error("inspection budget is negative ({0} s)")]
    NegativeBudget(f64),

    #[error("requested duration {requested} s exceeds path duration {available} s")]
    DurationExceeded { requested: f64, available: f64 },

    #[error("empty structure set")]
    EmptyUniverse,

    #[error("no feasible iteration out of {0}")]
    NoFeasibleIteration(usize),

    #[error("could not place structure {index} after {attempts} attempts")]
    PlacementFailed { index: usize, attempts: usize },

    #[error("schema error at '{path}': {message}")]
    Schema { path: String, message: String },

    #[error("plan validation failed: {0}")]
    PlanValidation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidValue {
            field,
            reason: reason.into(),
        }
    }
}
