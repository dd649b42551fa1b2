//! End-to-end runs that turn an [`ExperimentConfig`] into traces: spectra,
//! phase sweeps, the Control-power switch curves, fits and calibrations.
//!
//! Sweep points are evaluated in parallel; rows always follow the sweep order.

mod config;
mod runs;

pub use config::{Calibrated, ExperimentConfig, SaturationModel, Sweep, KEYS};
pub use runs::{calibrate_ellipticity, refit_photon_to_s, Calibration, Experiment};
