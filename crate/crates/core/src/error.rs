use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate rank: requested rank {requested} but numerical rank is {observed}")]
    DegenerateRank { requested: usize, observed: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("task diversity {best:.4e} below floor {floor:.4e} after {attempts} draws")]
    Diversity { best: f64, floor: f64, attempts: usize },

    #[error("task index {index} out of range 1..={max}")]
    Index { index: usize, max: usize },

    #[error("only {surviving} of the source fits survive epsilon = {epsilon}, need at least {required}")]
    AllSuppressed {
        epsilon: f64,
        surviving: usize,
        required: usize,
    },

    #[error("classifier direction is the zero vector")]
    DegenerateClassifier,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, used in failed-trial records.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::DegenerateRank { .. } => "degenerate_rank",
            Error::Contract(_) => "contract",
            Error::Config(_) => "config",
            Error::Diversity { .. } => "diversity",
            Error::Index { .. } => "index",
            Error::AllSuppressed { .. } => "all_suppressed",
            Error::DegenerateClassifier => "degenerate_classifier",
            Error::Unsupported(_) => "unsupported",
            Error::NotApplicable(_) => "not_applicable",
            Error::Domain(_) => "domain",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
