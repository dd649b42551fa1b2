//! Reflection from a single-sided micropillar cavity mode, optionally
//! dressed by a weakly coupled quantum-dot transition.
//!
//! All energies share one reference (detunings in μeV), and the linewidths
//! κ, κ_ex and γ are full energy decay rates, so the reflection coefficient
//! is
//!
//! ```text
//! r(ω) = 1 − κ_ex / [ i(ω_c − ω) + κ/2 + g² / ( i(ω_qd − ω) + γ ) ]
//! ```
//!
//! On resonance without an emitter this is `1 − 2α` with `α = κ_ex/κ`, and the
//! emitter-free dip `1 − |r|²` is a Lorentzian of FWHM κ. On joint resonance
//! it is `1 − 2α/(1 + C)` with `C = 2g²/(κγ)`, which changes sign at
//! `C = 2α − 1`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::trace::Trace;
use crate::units::Energy;

/// Linear polarization a cavity mode is resolved in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    H,
    V,
}

/// One polarization-resolved cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityMode<T> {
    center: Energy<T>,
    kappa: Energy<T>,
    kappa_ex: Energy<T>,
    label: ModeLabel,
}

impl<T: Real> CavityMode<T> {
    pub fn new(center: Energy<T>, kappa: Energy<T>, kappa_ex: Energy<T>, label: ModeLabel) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::invalid("cavity.center", "must be finite"));
        }
        if !(kappa.0 > T::zero()) || !kappa.is_finite() {
            return Err(Error::invalid("cavity.kappa", format!("must be > 0, got {}", kappa.0)));
        }
        if !(kappa_ex.0 > T::zero()) || kappa_ex.0 > kappa.0 {
            return Err(Error::invalid(
                "cavity.kappa_ex",
                format!("must satisfy 0 < kappa_ex <= kappa, got {} vs {}", kappa_ex.0, kappa.0),
            ));
        }
        Ok(Self {
            center,
            kappa,
            kappa_ex,
            label,
        })
    }

    /// Builds a mode from the interference contrast `α = κ_ex/κ`.
    pub fn with_alpha(center: Energy<T>, kappa: Energy<T>, alpha: T, label: ModeLabel) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(Error::invalid("cavity.alpha", format!("must lie in (0, 1], got {alpha}")));
        }
        Self::new(center, kappa, Energy(alpha * kappa.0), label)
    }

    pub fn center(&self) -> Energy<T> {
        self.center
    }

    pub fn kappa(&self) -> Energy<T> {
        self.kappa
    }

    pub fn kappa_ex(&self) -> Energy<T> {
        self.kappa_ex
    }

    pub fn label(&self) -> ModeLabel {
        self.label
    }

    pub fn alpha(&self) -> T {
        self.kappa_ex.0 / self.kappa.0
    }

    /// Same mode, shifted to a new center.
    pub fn recentered(&self, center: Energy<T>) -> Self {
        Self { center, ..*self }
    }
}

/// Quantum-dot transition coupled to a cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterCoupling<T> {
    g: Energy<T>,
    gamma: Energy<T>,
    transition_center: Energy<T>,
}

impl<T: Real> EmitterCoupling<T> {
    pub fn new(g: Energy<T>, gamma: Energy<T>, transition_center: Energy<T>) -> Result<Self> {
        if !(g.0 >= T::zero()) || !g.is_finite() {
            return Err(Error::invalid("emitter.g", format!("must be >= 0, got {}", g.0)));
        }
        if !(gamma.0 > T::zero()) || !gamma.is_finite() {
            return Err(Error::invalid("emitter.gamma", format!("must be > 0, got {}", gamma.0)));
        }
        if !transition_center.is_finite() {
            return Err(Error::invalid("emitter.center", "must be finite"));
        }
        Ok(Self {
            g,
            gamma,
            transition_center,
        })
    }

    /// Emitter with coupling chosen to reach cooperativity `c` with `mode`.
    pub fn with_cooperativity(
        c: T,
        mode: &CavityMode<T>,
        gamma: Energy<T>,
        transition_center: Energy<T>,
    ) -> Result<Self> {
        let g = g_from_cooperativity(c, mode, gamma)?;
        Self::new(g, gamma, transition_center)
    }

    pub fn g(&self) -> Energy<T> {
        self.g
    }

    pub fn gamma(&self) -> Energy<T> {
        self.gamma
    }

    pub fn transition_center(&self) -> Energy<T> {
        self.transition_center
    }

    /// `C = 2g²/(κγ)` against `mode`.
    pub fn cooperativity(&self, mode: &CavityMode<T>) -> T {
        lit::<T>(2.0) * self.g.0 * self.g.0 / (mode.kappa.0 * self.gamma.0)
    }

    /// Purcell factor `F_P = 2C`.
    pub fn purcell_factor(&self, mode: &CavityMode<T>) -> T {
        lit::<T>(2.0) * self.cooperativity(mode)
    }

    pub fn shifted(&self, offset: Energy<T>) -> Self {
        Self {
            transition_center: self.transition_center + offset,
            ..*self
        }
    }
}

/// One point of a complex reflection spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionSample<T> {
    pub detuning: Energy<T>,
    pub r: Complex<T>,
}

impl<T: Real> ReflectionSample<T> {
    pub fn reflectivity(&self) -> T {
        self.r.norm_sqr()
    }
}

/// Complex amplitude reflection coefficient at laser energy `laser`.
pub fn reflection_coefficient<T: Real>(
    laser: Energy<T>,
    mode: &CavityMode<T>,
    emitter: Option<&EmitterCoupling<T>>,
) -> Complex<T> {
    let half = lit::<T>(0.5);
    let mut denom = Complex::new(mode.kappa.0 * half, mode.center.0 - laser.0);
    if let Some(em) = emitter {
        if em.g.0 > T::zero() {
            let dot = Complex::new(em.gamma.0, em.transition_center.0 - laser.0);
            denom = denom + Complex::from(em.g.0 * em.g.0) / dot;
        }
    }
    Complex::from(T::one()) - Complex::from(mode.kappa_ex.0) / denom
}

/// Complex reflection over a detuning grid.
pub fn reflection_spectrum<T: Real>(
    grid: &[Energy<T>],
    mode: &CavityMode<T>,
    emitter: Option<&EmitterCoupling<T>>,
) -> Result<Vec<ReflectionSample<T>>> {
    validate_grid(grid)?;
    Ok(grid
        .iter()
        .map(|&detuning| ReflectionSample {
            detuning,
            r: reflection_coefficient(detuning, mode, emitter),
        })
        .collect())
}

/// `|r|²` over a detuning grid, as a two-column trace.
pub fn reflectivity_spectrum<T: Real>(
    grid: &[Energy<T>],
    mode: &CavityMode<T>,
    emitter: Option<&EmitterCoupling<T>>,
) -> Result<Trace<T>> {
    let samples = reflection_spectrum(grid, mode, emitter)?;
    let mut trace = Trace::new("reflectivity", &[("detuning", "ueV"), ("reflectivity", "1")]);
    for s in samples {
        trace.push_row(vec![s.detuning.0, s.reflectivity()]);
    }
    Ok(trace)
}

/// Coupling strength reaching cooperativity `c`: `g = sqrt(C·κ·γ/2)`.
pub fn g_from_cooperativity<T: Real>(c: T, mode: &CavityMode<T>, gamma: Energy<T>) -> Result<Energy<T>> {
    if !(c >= T::zero()) || !c.is_finite() {
        return Err(Error::invalid("cooperativity", format!("must be >= 0, got {c}")));
    }
    if !(gamma.0 > T::zero()) {
        return Err(Error::invalid("emitter.gamma", format!("must be > 0, got {}", gamma.0)));
    }
    Ok(Energy((c * mode.kappa.0 * gamma.0 * lit(0.5)).sqrt()))
}

pub(crate) fn validate_grid<T: Real>(grid: &[Energy<T>]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "detuning grid is empty"));
    }
    if grid.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("grid", "detuning grid contains non-finite values"));
    }
    if grid.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid("grid", "detuning grid must be strictly increasing"));
    }
    Ok(())
}
