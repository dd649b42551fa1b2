//! Power dependence of the dot-induced phase through the coherently
//! scattered fraction of two-level resonance fluorescence.
//!
//! `F(s) = (T₂/2T₁)/(1 + s)` with saturation parameter `s = k·n` for `n`
//! mean photons per Target pulse. Only coherently scattered light carries
//! the rotation, so the phase scales as `φ(n) = φ_max·F(k·n)/F(0)`.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams<T> {
    /// Lifetime, ns.
    pub t1: T,
    /// Coherence time, ns.
    pub t2: T,
    /// Saturation parameter per mean photon in the Target pulse.
    pub photon_to_s: T,
}

impl<T: Real> TwoLevelParams<T> {
    pub fn new(t1: T, t2: T, photon_to_s: T) -> Result<Self> {
        if !(t1 > T::zero()) || !t1.is_finite() {
            return Err(Error::invalid("t1", format!("must be > 0 ns, got {t1}")));
        }
        if !(t2 > T::zero() && t2 <= lit::<T>(2.0) * t1) {
            return Err(Error::invalid("t2", format!("must satisfy 0 < t2 <= 2*t1, got {t2}")));
        }
        if !(photon_to_s > T::zero()) || !photon_to_s.is_finite() {
            return Err(Error::invalid("photon_to_s", format!("must be > 0, got {photon_to_s}")));
        }
        Ok(Self { t1, t2, photon_to_s })
    }

    pub fn with_photon_to_s(&self, photon_to_s: T) -> Result<Self> {
        Self::new(self.t1, self.t2, photon_to_s)
    }

    pub fn coherent_fraction(&self, s: T) -> T {
        coherent_fraction(self, s)
    }

    /// `F(k·n)/F(0)`, the factor by which `n` photons suppress the coherent response.
    pub fn relative_coherence(&self, photons: T) -> T {
        T::one() / (T::one() + self.photon_to_s * photons)
    }
}

/// Coherent fraction of the scattered light at saturation parameter `s`.
pub fn coherent_fraction<T: Real>(p: &TwoLevelParams<T>, s: T) -> T {
    let s = s.max(T::zero());
    (p.t2 / (lit::<T>(2.0) * p.t1)) / (T::one() + s)
}

/// Phase shift at `photons` mean photons per Target pulse.
pub fn phase_vs_photon_number<T: Real>(photons: T, p: &TwoLevelParams<T>, phi_max: T) -> Result<T> {
    if !(photons >= T::zero()) || !photons.is_finite() {
        return Err(Error::invalid("photons", format!("must be >= 0, got {photons}")));
    }
    let s = p.photon_to_s * photons;
    Ok(phi_max * coherent_fraction(p, s) / coherent_fraction(p, T::zero()))
}

/// `k` such that `φ(anchor_photons) = anchor_phase` given the zero-power phase.
pub fn photon_to_s_for_anchor<T: Real>(phi_max: T, anchor_phase: T, anchor_photons: T) -> Result<T> {
    if !(anchor_photons > T::zero()) {
        return Err(Error::invalid("anchor_photons", "must be > 0"));
    }
    if !(anchor_phase > T::zero()) || !(phi_max > anchor_phase) {
        return Err(Error::Calibration {
            quantity: "photon_to_s",
            reason: format!(
                "zero-power phase {phi_max} deg must exceed the anchor {anchor_phase} deg at {anchor_photons} photons"
            ),
        });
    }
    Ok((phi_max / anchor_phase - T::one()) / anchor_photons)
}

/// Solves the two-anchor system `φ_max/(1 + k·n₁) = φ₁`, `φ_max/(1 + k·n₂) = φ₂`.
///
/// Returns `(k, φ_max)`. Requires `n₂ > n₁` and `φ₂ < φ₁`.
pub fn saturation_from_anchors<T: Real>(phase1: T, photons1: T, phase2: T, photons2: T) -> Result<(T, T)> {
    if !(photons2 > photons1 && photons1 >= T::zero()) {
        return Err(Error::invalid("anchor_photons", "need 0 <= n1 < n2"));
    }
    if !(phase2 < phase1 && phase2 > T::zero()) {
        return Err(Error::Calibration {
            quantity: "photon_to_s",
            reason: format!("phase must drop between the anchors, got {phase1} -> {phase2}"),
        });
    }
    let k = (phase1 - phase2) / (phase2 * photons2 - phase1 * photons1);
    if !(k > T::zero()) {
        return Err(Error::Calibration {
            quantity: "photon_to_s",
            reason: format!("anchors imply non-positive slope {k}"),
        });
    }
    Ok((k, phase1 * (T::one() + k * photons1)))
}
