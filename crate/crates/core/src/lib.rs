//! Decoy-state BB84 satellite downlink simulation with LLR-aware LDPC
//! reconciliation and finite-key rate estimation.
//!
//! Numerical kernels are generic over [`Real`] (`f32` or `f64`). The
//! aliases below fix the precision used by the pipeline.

pub mod detection;
pub mod error;
pub mod keyrate;
pub mod ldpc;
pub mod passlink;
pub mod quad;
pub mod reconcile;
pub mod rng;
pub mod scalar;
pub mod scintseries;
pub mod turbulence;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Real;

pub type PassConfig = passlink::PassConfig<f64>;
pub type PassPoint = passlink::PassPoint<f64>;
pub type LinkSample = passlink::LinkSample<f64>;
pub type TurbulenceProfile = turbulence::TurbulenceProfile<f64>;
pub type TurbulenceState = turbulence::TurbulenceState<f64>;
pub type ScintConfig = scintseries::ScintConfig<f64>;
pub type ScintSeries = scintseries::ScintSeries<f64>;
pub type DetectorConfig = detection::DetectorConfig<f64>;
