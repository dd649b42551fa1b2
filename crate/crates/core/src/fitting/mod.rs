//! Nonlinear least squares, lineshape models, CSV ingestion and the 1-D
//! calibrations built on root bracketing.

mod calibrate;
mod lm;
mod models;
mod roots;
mod series;

pub use calibrate::{calibrate_beta, BetaCalibration};
pub use lm::{jacobian, least_squares, FitResult, LsOptions, Model};
pub use models::{
    fit_gaussian, fit_lorentzian_dip, fit_lorentzian_dip_with, gaussian_initial_guess, lorentzian_initial_guess,
    Background, Gaussian, LorentzianDip,
};
pub use roots::bisect;
pub use series::DataSeries;
