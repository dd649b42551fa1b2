use crate::error::{Error, Result};
use crate::fitting::bisect;
use crate::scalar::{lit, Real};
use crate::spindyn::{ControlPulse, PumpingModel};

/// Outcome of [`calibrate_beta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaCalibration<T> {
    /// Ω per √(photons/ns), in ns⁻¹·(ns/photon)^½.
    pub beta: T,
    /// Switching ratio reproduced with `beta`.
    pub achieved_ratio: T,
    pub omega: T,
}

/// Finds `β` so that a Control pulse of `photons` at `temperature` leaves the
/// fraction `switching_ratio = φ_after/φ_before = 1 − Ξ` of the phase.
///
/// `pulse.beta` is ignored. The bracket starts at `[0, 1]` and doubles its
/// upper end until the ratio falls below the target.
pub fn calibrate_beta<T: Real>(
    model: &PumpingModel<T>,
    pulse: &ControlPulse<T>,
    switching_ratio: T,
    temperature: T,
) -> Result<BetaCalibration<T>> {
    if !(switching_ratio > T::zero() && switching_ratio < T::one()) {
        return Err(Error::invalid(
            "switching_ratio",
            format!("must lie in (0, 1), got {switching_ratio}"),
        ));
    }
    let ratio_at = |beta: T| -> Result<T> {
        let p = ControlPulse { beta, ..*pulse };
        Ok(T::one() - model.run(&p, temperature)?.contrast)
    };
    let f = |beta: T| ratio_at(beta).map(|r| r - switching_ratio);

    let mut hi = T::one();
    let mut tries = 0;
    while f(hi)? > T::zero() {
        hi = hi * lit(2.0);
        tries += 1;
        if tries > 40 {
            return Err(Error::Calibration {
                quantity: "beta",
                reason: format!(
                    "ratio {} not reached even at beta = {hi} (photons {}, T = {temperature} K); drive cannot pump below {}",
                    switching_ratio,
                    pulse.photons,
                    ratio_at(hi)?
                ),
            });
        }
    }
    let beta = bisect(f, T::zero(), hi, hi * lit(1e-13), 200)?;
    let achieved_ratio = ratio_at(beta)?;
    if (achieved_ratio - switching_ratio).abs() > lit(1e-4) {
        return Err(Error::Calibration {
            quantity: "beta",
            reason: format!("bisection ended at ratio {achieved_ratio}, target {switching_ratio}"),
        });
    }
    let omega = crate::spindyn::control_rate(beta, pulse.photons, pulse.duration)?;
    Ok(BetaCalibration {
        beta,
        achieved_ratio,
        omega,
    })
}
