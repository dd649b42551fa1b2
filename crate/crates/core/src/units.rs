//! Physical constants and the few unit conversions the simulator needs.
//!
//! Energies are carried in μeV, rates in ns⁻¹ (1 GHz is read as 1 ns⁻¹, a
//! plain rate, never an angular frequency), times in ns and temperatures in K.
//! eV and nm only appear at I/O boundaries.

use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Reduced Planck constant, μeV·ns.
pub const HBAR: f64 = 0.6582119569;
/// Boltzmann constant, μeV/K.
pub const K_B: f64 = 86.17333;
/// Bohr magneton, μeV/T.
pub const MU_B: f64 = 57.88382;
/// Planck constant times speed of light, eV·nm.
pub const HC: f64 = 1239.84198;

const UEV_PER_EV: f64 = 1.0e6;

/// An energy in μeV. Detunings may be negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Energy<T>(pub T);

impl<T: Real> Energy<T> {
    pub fn micro_ev(value: T) -> Self {
        Energy(value)
    }

    pub fn from_ev(ev: T) -> Self {
        Energy(ev * lit(UEV_PER_EV))
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn as_ev(self) -> T {
        self.0 / lit(UEV_PER_EV)
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl<T: Real> Add for Energy<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Energy(self.0 + rhs.0)
    }
}

impl<T: Real> Sub for Energy<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Energy(self.0 - rhs.0)
    }
}

impl<T: Real> Neg for Energy<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Energy(-self.0)
    }
}

/// A plain rate in ns⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Rate<T>(pub T);

impl<T: Real> Rate<T> {
    pub fn per_ns(value: T) -> Result<Self> {
        if !(value >= T::zero()) || !value.is_finite() {
            return Err(Error::invalid("rate", format!("must be finite and >= 0, got {value}")));
        }
        Ok(Rate(value))
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Photon energy of light at `lambda_nm`.
pub fn wavelength_to_energy<T: Real>(lambda_nm: T) -> Result<Energy<T>> {
    if !(lambda_nm > T::zero()) || !lambda_nm.is_finite() {
        return Err(Error::invalid(
            "wavelength",
            format!("must be a positive finite length in nm, got {lambda_nm}"),
        ));
    }
    Ok(Energy::from_ev(lit::<T>(HC) / lambda_nm))
}

/// Inverse of [`wavelength_to_energy`].
pub fn energy_to_wavelength<T: Real>(e: Energy<T>) -> Result<T> {
    let ev = e.as_ev();
    if !(ev > T::zero()) || !ev.is_finite() {
        return Err(Error::invalid(
            "energy",
            format!("photon energy must be positive, got {} ueV", e.0),
        ));
    }
    Ok(lit::<T>(HC) / ev)
}

/// Zeeman splitting `|g|·μ_B·B`.
pub fn zeeman_splitting<T: Real>(g_factor: T, field_tesla: T) -> Result<Energy<T>> {
    if !(field_tesla >= T::zero()) {
        return Err(Error::invalid(
            "field",
            format!("magnetic field must be >= 0 T, got {field_tesla}"),
        ));
    }
    Ok(Energy(g_factor.abs() * lit(MU_B) * field_tesla))
}

/// Angular frequency `E/ħ` in rad/ns.
pub fn energy_to_angular_rate<T: Real>(e: Energy<T>) -> T {
    e.0 / lit(HBAR)
}

/// Linewidth (μeV) of a transition with lifetime `t1_ns`, i.e. `ħ/T₁`.
pub fn linewidth_from_lifetime<T: Real>(t1_ns: T) -> Result<Energy<T>> {
    if !(t1_ns > T::zero()) {
        return Err(Error::invalid("t1", format!("lifetime must be > 0 ns, got {t1_ns}")));
    }
    Ok(Energy(lit::<T>(HBAR) / t1_ns))
}

/// Cavity energy decay rate `E/Q` for a mode at `lambda_nm` with quality factor `q`.
pub fn kappa_from_quality_factor<T: Real>(lambda_nm: T, q: T) -> Result<Energy<T>> {
    if !(q > T::zero()) {
        return Err(Error::invalid("q_factor", format!("must be > 0, got {q}")));
    }
    Ok(Energy(wavelength_to_energy(lambda_nm)?.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wavelength_examples() {
        let e = wavelength_to_energy(HC).unwrap();
        assert_relative_eq!(e.as_ev(), 1.0, epsilon = 1e-15);
        // 1239.84198 / 934.55 and / 934.49, by hand
        assert!((wavelength_to_energy(934.55_f64).unwrap().as_ev() - 1.32667).abs() < 5e-6);
        assert!((wavelength_to_energy(934.49_f64).unwrap().as_ev() - 1.32676).abs() < 5e-6);
    }

    #[test]
    fn wavelength_rejects_non_positive() {
        assert!(matches!(
            wavelength_to_energy(0.0_f64),
            Err(Error::InvalidInput { name: "wavelength", .. })
        ));
        assert!(wavelength_to_energy(-3.0_f64).is_err());
        assert!(wavelength_to_energy(f64::NAN).is_err());
    }

    #[test]
    fn zeeman_examples() {
        assert!((zeeman_splitting(0.86_f64, 8.0).unwrap().0 - 398.2).abs() < 0.05);
        assert!((zeeman_splitting(-0.86_f64, 8.0).unwrap().0 - 398.2).abs() < 0.05);
        assert!((zeeman_splitting(0.18_f64, 8.0).unwrap().0 - 83.4).abs() < 0.05);
        assert_eq!(zeeman_splitting(0.86, 0.0).unwrap().0, 0.0);
        assert!(zeeman_splitting(0.86, -1.0).is_err());
    }

    #[test]
    fn zeeman_is_linear_in_field() {
        for &(g, b) in &[(0.86, 8.0), (0.18, 3.3), (2.0, 0.125)] {
            let one = zeeman_splitting(g, b).unwrap().0;
            let two = zeeman_splitting(g, 2.0 * b).unwrap().0;
            assert_eq!(two, 2.0 * one);
        }
    }

    #[test]
    fn angular_rate_examples() {
        assert_relative_eq!(energy_to_angular_rate(Energy(HBAR)), 1.0, epsilon = 1e-15);
        assert!((energy_to_angular_rate(Energy(265.33_f64)) - 403.1).abs() < 0.05);
        assert_eq!(energy_to_angular_rate(Energy(0.0)), 0.0);
    }

    #[test]
    fn kappa_at_design_wavelength() {
        let k = kappa_from_quality_factor(934.55_f64, 5000.0).unwrap().0;
        assert!((k - 265.33).abs() < 0.01);
        let gamma = linewidth_from_lifetime(0.5_f64).unwrap().0;
        assert!((gamma - 1.3164).abs() < 1e-4);
    }

    #[test]
    fn f32_conversions() {
        let e = wavelength_to_energy(934.55_f32).unwrap();
        assert!((e.as_ev() - 1.32667).abs() < 1e-5);
    }

    proptest::proptest! {
        #[test]
        fn wavelength_round_trip(ev in 0.1f64..10.0) {
            let e = Energy::from_ev(ev);
            let back = wavelength_to_energy(energy_to_wavelength(e).unwrap()).unwrap();
            proptest::prop_assert!(((back.0 - e.0) / e.0).abs() < 1e-12);
        }
    }
}
