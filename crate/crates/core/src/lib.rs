//! Simulation and fitting toolkit for a charged quantum dot in a micropillar
//! cavity used as a photon phase shifter and phase switch.
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix them to `f64`, which is what the scenarios and the CLI use.

pub mod cavity;
pub mod error;
pub mod fitting;
pub mod polarimetry;
pub mod saturation;
pub mod scalar;
pub mod scenarios;
pub mod spindyn;
pub mod trace;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Energy = units::Energy<f64>;
pub type Rate = units::Rate<f64>;
pub type CavityMode = cavity::CavityMode<f64>;
pub type EmitterCoupling = cavity::EmitterCoupling<f64>;
pub type ReflectionSample = cavity::ReflectionSample<f64>;
pub type PolarizationState = polarimetry::PolarizationState<f64>;
pub type CircularIntensities = polarimetry::CircularIntensities<f64>;
pub type Populations = spindyn::Populations<f64>;
pub type RateParams = spindyn::RateParams<f64>;
pub type SpinFlipLaw = spindyn::SpinFlipLaw<f64>;
pub type TwoLevelParams = saturation::TwoLevelParams<f64>;
pub type DataSeries = fitting::DataSeries<f64>;
pub type FitResult = fitting::FitResult<f64>;
pub type Trace = trace::Trace<f64>;

pub type CavityModeF32 = cavity::CavityMode<f32>;
pub type PopulationsF32 = spindyn::Populations<f32>;
