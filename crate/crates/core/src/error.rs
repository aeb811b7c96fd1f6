use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid problem: n = {n}, r = {r} (need 1 <= r <= n <= {max_n})")]
    InvalidSpec { n: u32, r: u32, max_n: u32 },

    #[error("projected state count {projected} exceeds the ceiling {ceiling}")]
    StateCeiling { projected: u64, ceiling: u64 },

    #[error("brute force would enumerate {outcomes} outcomes (limit {limit})")]
    OracleTooLarge { outcomes: u128, limit: u128 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("not enough terms: need {required}, have {available}")]
    InsufficientTerms { required: usize, available: usize },

    #[error("index range {from}..={to} is not covered by the sequence (order {order}, length {len})")]
    IndexRange {
        from: u64,
        to: u64,
        order: usize,
        len: usize,
    },

    #[error("leading coefficient vanishes at T = {0}")]
    LeadingVanishes(u64),

    #[error("operator needs {need} initial values, has {have}")]
    MissingInitial { need: usize, have: usize },

    #[error("exact evaluation to T = {t_max} exceeds the limit {limit}")]
    ExactLimit { t_max: u64, limit: u64 },

    #[error("sample ladder is not geometric with ratio 2")]
    NonGeometricLadder,

    #[error("need at least {need} samples for depth {depth}, have {have}")]
    TooFewSamples { need: usize, depth: usize, have: usize },

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
