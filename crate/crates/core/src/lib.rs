#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod harness;
pub mod msd;
pub mod quad;
pub mod ra;
pub mod raptor;
pub mod scalar;
pub mod seed;
pub mod superposition;
pub mod system_sim;
pub mod zc;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision instantiations.
pub type PreambleBank64 = zc::PreambleBank<f64>;
pub type LoadEstimator64 = ra::LoadEstimator<f64>;
pub type PrachObservation64 = ra::PrachObservation<f64>;
pub type WeightProfile64 = superposition::WeightProfile<f64>;
pub type LayeredFrame64 = superposition::LayeredFrame<f64>;
pub type GrwDesign64 = superposition::GrwDesign<f64>;

/// Single-precision instantiations.
pub type PreambleBank32 = zc::PreambleBank<f32>;
pub type LoadEstimator32 = ra::LoadEstimator<f32>;
pub type PrachObservation32 = ra::PrachObservation<f32>;
pub type WeightProfile32 = superposition::WeightProfile<f32>;
pub type LayeredFrame32 = superposition::LayeredFrame<f32>;
pub type GrwDesign32 = superposition::GrwDesign<f32>;
