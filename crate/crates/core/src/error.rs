use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("root index {root} is outside [1, {}]", .n_zc - 1)]
    InvalidRoot { root: usize, n_zc: usize },
    #[error("sequence length {0} is not prime")]
    NonPrimeLength(usize),
    #[error("combined cyclic shift {shift} does not fit in a length-{n_zc} sequence")]
    ShiftOverflow { shift: usize, n_zc: usize },
    #[error("cells {first:?} and {second:?} map to the same cyclic shift")]
    ShiftCollision {
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no preamble for cell (preamble {preamble}, timing {timing})")]
    MissingPreamble { preamble: usize, timing: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible target: {0}")]
    Infeasible(String),
    #[error("zero rate: the device cannot be served with finitely many resource blocks")]
    Unservable,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
