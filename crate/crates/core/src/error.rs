use thiserror::Error;

/// Errors surfaced by the capacity calculus, codec construction, decoders,
/// and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain (probabilities outside
    /// [0, 1], non-positive powers, and the like).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested construction cannot exist at these parameters, e.g. a
    /// signature block at least as long as the whole codeword, or a rate
    /// allocation that leaves no room for even a single message.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An exhaustive search would enumerate more candidates than the guard
    /// allows. Callers should switch to the greedy/iterative solver.
    #[error("exhaustive search would visit {candidates} candidates (limit {limit})")]
    GuardExceeded { candidates: u128, limit: u128 },

    /// A config file failed to parse or contained an unknown key.
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    /// A serialized codebook was malformed.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }
}
