use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("underlying undirected graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("graph has no arcs")]
    DegenerateGraph,

    #[error("step size {epsilon} makes a diagonal entry negative; largest admissible step is {max_admissible}")]
    StepSize { epsilon: f64, max_admissible: f64 },

    #[error("path length k = {k} outside [1, {k_max}]")]
    KOutOfRange { k: usize, k_max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("generation failed for {config}: {resamples} resamples exceeded budget of {budget}")]
    ResampleBudget {
        config: String,
        resamples: usize,
        budget: usize,
    },

    #[error("schema version {found} not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("record count mismatch: manifest declares {declared}, file holds {found}")]
    CountMismatch { declared: usize, found: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
