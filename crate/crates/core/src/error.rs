use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown pattern `{name}` (available: {available})")]
    UnknownPattern { name: String, available: String },

    #[error("invalid slot pattern: {0}")]
    InvalidPattern(String),

    #[error("comb size {0} is not supported (expected one of 1, 2, 3, 7, 14)")]
    UnsupportedComb(usize),

    #[error("sample index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("profile of {len} bins is too short for the CFAR window (need at least {required})")]
    ProfileTooShort { len: usize, required: usize },

    #[error("carrier resolutions are equal; the alias system is singular")]
    SingularPair,

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
