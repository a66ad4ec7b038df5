use thiserror::Error;

/// Errors raised by model construction and inference.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix shapes disagree with the label lists.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Every cell of the model assigns zero probability to the observation.
    #[error("degenerate evidence: observation has zero probability under every cell ({0})")]
    DegenerateEvidence(String),

    /// The unanimous-positive limit does not exist for this model.
    #[error("undefined limit: {0}")]
    UndefinedLimit(String),

    /// An adaptive computation hit its size cap without converging.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A range argument (band, window, index) is malformed.
    #[error("range error: {0}")]
    Range(String),

    /// Rejection sampling exhausted its draw budget before collecting
    /// enough accepted samples.
    #[error("insufficient acceptance: {accepted} accepted of {total} draws (needed {needed})")]
    InsufficientAcceptance {
        accepted: u64,
        total: u64,
        needed: u64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {value} is not in [0, 1]")))
    }
}
