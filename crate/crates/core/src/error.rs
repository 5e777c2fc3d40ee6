use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("the set of target categories is empty")]
    EmptyTargets,

    #[error("category index {index} out of range for p = {p}")]
    CategoryOutOfRange { index: usize, p: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The rejections claim both `theta_j < theta_k` and `theta_j > theta_k`
    /// for some pair, or produce an empty rank interval. Only a test family
    /// that does not control the familywise error rate can do this.
    #[error("inconsistent rejections for category {category}: lower bound {lo} exceeds upper bound {hi}")]
    InconsistentRejections {
        category: usize,
        lo: usize,
        hi: usize,
    },
}

impl Error {
    /// True when the error reflects a violated internal invariant rather
    /// than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, Error::InconsistentRejections { .. })
    }
}
