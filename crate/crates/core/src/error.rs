use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("singular system: {0}")]
    Singular(&'static str),

    #[error("solver produced non-finite values after {iteration} iterations")]
    SolverDiverged { iteration: usize },

    #[error("record shorter than frame length: {len} < {frame_len}")]
    RecordTooShort { len: usize, frame_len: usize },

    #[error("start index {start} out of range (max {max})")]
    StartOutOfRange { start: usize, max: usize },

    #[error("class {0} has no members")]
    EmptyClass(&'static str),

    #[error("need at least {needed} items, got {got}")]
    TooFew { needed: usize, got: usize },

    #[error("no positive instances")]
    NoPositives,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("SMO stalled after {iterations} updates with {violations} KKT violations")]
    Stalled { iterations: usize, violations: usize },

    #[error("event injection rejected: {0}")]
    Injection(String),

    #[error("could not place {wanted} events in record of length {len}")]
    InfeasiblePacking { wanted: usize, len: usize },
}
