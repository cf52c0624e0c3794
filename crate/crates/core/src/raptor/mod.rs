//! Raptor codes: LDPC precode, LT code, channel adapters and sum-product decoding.

mod asymptotic;
mod code;
mod decoder;
mod degree;
mod ldpc;

pub use asymptotic::*;
pub use code::*;
pub use decoder::*;
pub use degree::*;
pub use ldpc::LdpcPrecode;
