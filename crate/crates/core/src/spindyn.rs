//! Rate-equation model of optical spin pumping in the lambda system
//! Ḡ ↔ T̄ → {Ḡ, G}, with a temperature-activated ground-state interconversion.
//!
//! ```text
//! dN_Ḡ/dt = Γ₁N_T̄ − ΩN_Ḡ − ξN_Ḡ + ξN_G
//! dN_G/dt = Γ₂N_T̄ − ξN_G + ξN_Ḡ
//! dN_T̄/dt = ΩN_Ḡ − (Γ₁ + Γ₂)N_T̄
//! ```
//!
//! The right-hand sides sum to zero, so total population is conserved up to
//! integrator round-off.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::units::{Energy, K_B};

/// Occupations of Ḡ, G and T̄.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Populations<T> {
    pub n_gbar: T,
    pub n_g: T,
    pub n_tbar: T,
}

impl<T: Real> Populations<T> {
    pub fn new(n_gbar: T, n_g: T, n_tbar: T) -> Result<Self> {
        let p = Self { n_gbar, n_g, n_tbar };
        p.validate(lit(1e-9))?;
        Ok(p)
    }

    /// Both ground states equally populated, trion empty.
    pub fn unpolarized() -> Self {
        let half = lit(0.5);
        Self {
            n_gbar: half,
            n_g: half,
            n_tbar: T::zero(),
        }
    }

    pub fn sum(&self) -> T {
        self.n_gbar + self.n_g + self.n_tbar
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.n_gbar, self.n_g, self.n_tbar]
    }

    fn from_array(a: [T; 3]) -> Self {
        Self {
            n_gbar: a[0],
            n_g: a[1],
            n_tbar: a[2],
        }
    }

    fn validate(&self, tol: T) -> Result<()> {
        for (name, v) in [("n_gbar", self.n_gbar), ("n_g", self.n_g), ("n_tbar", self.n_tbar)] {
            if !v.is_finite() || v < -tol || v > T::one() + tol {
                return Err(Error::invalid(name, format!("population must lie in [0, 1], got {v}")));
            }
        }
        if (self.sum() - T::one()).abs() > tol {
            return Err(Error::invalid("populations", format!("must sum to 1, got {}", self.sum())));
        }
        Ok(())
    }
}

/// Rates driving the populations, all in ns⁻¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams<T> {
    /// Control-pulse pumping rate Ḡ → T̄.
    pub omega: T,
    /// T̄ → Ḡ.
    pub gamma1: T,
    /// T̄ → G.
    pub gamma2: T,
    /// Ḡ ↔ G interconversion.
    pub xi: T,
}

impl<T: Real> RateParams<T> {
    pub fn new(omega: T, gamma1: T, gamma2: T, xi: T) -> Result<Self> {
        for (name, v) in [("omega", omega), ("gamma1", gamma1), ("gamma2", gamma2), ("xi", xi)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::invalid(name, format!("rate must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self {
            omega,
            gamma1,
            gamma2,
            xi,
        })
    }

    /// Trion relaxation rates used for the quantum dot in this device.
    pub fn device(omega: T, xi: T) -> Result<Self> {
        Self::new(omega, lit(1.2), lit(1.0), xi)
    }

    /// Generator matrix `M` of `dN/dt = M·N`, rows and columns ordered (Ḡ, G, T̄).
    pub fn generator(&self) -> [[T; 3]; 3] {
        let z = T::zero();
        [
            [-self.omega - self.xi, self.xi, self.gamma1],
            [self.xi, -self.xi, self.gamma2],
            [self.omega, z, -(self.gamma1 + self.gamma2)],
        ]
    }
}

/// Arrhenius-type spin-flip law `ξ = A·exp(−E_z / k_B T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinFlipLaw<T> {
    pub prefactor: T,
    pub zeeman: Energy<T>,
}

impl<T: Real> SpinFlipLaw<T> {
    pub fn new(prefactor: T, zeeman: Energy<T>) -> Result<Self> {
        if !(prefactor >= T::zero()) || !prefactor.is_finite() {
            return Err(Error::invalid("spin.a", format!("prefactor must be >= 0, got {prefactor}")));
        }
        if !(zeeman.0 > T::zero()) || !zeeman.is_finite() {
            return Err(Error::invalid("spin.ez", format!("Zeeman energy must be > 0, got {}", zeeman.0)));
        }
        Ok(Self { prefactor, zeeman })
    }
}

pub fn derivatives<T: Real>(p: &Populations<T>, r: &RateParams<T>) -> [T; 3] {
    let d_gbar = r.gamma1 * p.n_tbar - r.omega * p.n_gbar - r.xi * p.n_gbar + r.xi * p.n_g;
    let d_g = r.gamma2 * p.n_tbar - r.xi * p.n_g + r.xi * p.n_gbar;
    let d_tbar = r.omega * p.n_gbar - (r.gamma1 + r.gamma2) * p.n_tbar;
    [d_gbar, d_g, d_tbar]
}

/// Integrates for `duration` ns with classical RK4.
///
/// The step is `duration / ceil(duration / dt)`, i.e. at most `dt`.
pub fn integrate<T: Real>(p0: &Populations<T>, r: &RateParams<T>, duration: T, dt: T) -> Result<Populations<T>> {
    integrate_observed(p0, r, duration, dt, |_, _| {})
}

/// [`integrate`], calling `observe(t, populations)` after every step.
pub fn integrate_observed<T: Real, F>(
    p0: &Populations<T>,
    r: &RateParams<T>,
    duration: T,
    dt: T,
    mut observe: F,
) -> Result<Populations<T>>
where
    F: FnMut(T, &Populations<T>),
{
    if !(duration >= T::zero()) || !duration.is_finite() {
        return Err(Error::Integration {
            quantity: "duration",
            reason: format!("must be finite and >= 0, got {duration}"),
        });
    }
    p0.validate(lit(1e-9)).map_err(|e| Error::Integration {
        quantity: "initial populations",
        reason: e.to_string(),
    })?;
    if duration == T::zero() {
        return Ok(*p0);
    }
    if !(dt > T::zero()) || dt > duration {
        return Err(Error::Integration {
            quantity: "dt",
            reason: format!("step must satisfy 0 < dt <= duration ({duration}), got {dt}"),
        });
    }
    let steps = (duration / dt - lit(1e-9)).ceil().max(T::one());
    let n = steps.to_usize().ok_or_else(|| Error::Integration {
        quantity: "dt",
        reason: "too many steps".into(),
    })?;
    let h = duration / steps;
    let half = lit::<T>(0.5);
    let sixth = lit::<T>(1.0 / 6.0);
    let two = lit::<T>(2.0);

    let f = |y: [T; 3]| derivatives(&Populations::from_array(y), r);
    let axpy = |y: [T; 3], k: [T; 3], s: T| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];

    let mut y = p0.as_array();
    for i in 0..n {
        let k1 = f(y);
        let k2 = f(axpy(y, k1, half * h));
        let k3 = f(axpy(y, k2, half * h));
        let k4 = f(axpy(y, k3, h));
        for j in 0..3 {
            y[j] = y[j] + h * sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]);
        }
        let p = Populations::from_array(y);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                quantity: "populations",
                reason: format!("became non-finite at step {i}"),
            });
        }
        observe(h * T::from_usize(i + 1).unwrap(), &p);
    }
    let out = Populations::from_array(y);
    out.validate(lit(1e-6)).map_err(|e| Error::Integration {
        quantity: "final populations",
        reason: e.to_string(),
    })?;
    Ok(out)
}

/// `ξ(T)`; zero at `T = 0`.
pub fn spin_flip_rate<T: Real>(law: &SpinFlipLaw<T>, temperature: T) -> Result<T> {
    if !(temperature >= T::zero()) || temperature.is_nan() {
        return Err(Error::invalid("temperature", format!("must be >= 0 K, got {temperature}")));
    }
    if temperature == T::zero() {
        return Ok(T::zero());
    }
    if temperature.is_infinite() {
        return Ok(law.prefactor);
    }
    Ok(law.prefactor * (-law.zeeman.0 / (lit::<T>(K_B) * temperature)).exp())
}

/// `Ξ = (N^i − N^f)/(N^i + N^f)` for the Ḡ population.
pub fn switching_contrast<T: Real>(n_gbar_before: T, n_gbar_after: T) -> Result<T> {
    if !(n_gbar_before >= T::zero()) || !(n_gbar_after >= T::zero()) {
        return Err(Error::invalid("n_gbar", "populations must be >= 0"));
    }
    let total = n_gbar_before + n_gbar_after;
    if total == T::zero() {
        return Err(Error::UndefinedContrast("N_Gbar is zero before and after the Control pulse"));
    }
    Ok((n_gbar_before - n_gbar_after) / total)
}

/// Phase left after the Control pulse: `φ_baseline·(1 − Ξ)`.
pub fn phase_after_control<T: Real>(xi: T, baseline_phase: T) -> Result<T> {
    if !(xi >= T::zero() && xi <= T::one()) {
        return Err(Error::invalid("xi", format!("switching contrast must lie in [0, 1], got {xi}")));
    }
    if !(baseline_phase > T::zero() && baseline_phase < lit(180.0)) {
        return Err(Error::invalid(
            "baseline_phase",
            format!("must lie in (0, 180) degrees, got {baseline_phase}"),
        ));
    }
    Ok(baseline_phase * (T::one() - xi))
}

/// Maps mean photons per Control pulse to a pumping rate: `Ω = β·√(n / τ)`.
pub fn control_rate<T: Real>(beta: T, photons: T, duration: T) -> Result<T> {
    if !(photons >= T::zero()) {
        return Err(Error::invalid("control_photons", format!("must be >= 0, got {photons}")));
    }
    if !(duration > T::zero()) {
        return Err(Error::invalid("control.duration", format!("must be > 0, got {duration}")));
    }
    if !(beta >= T::zero()) {
        return Err(Error::invalid("control.beta", format!("must be >= 0, got {beta}")));
    }
    Ok(beta * (photons / duration).sqrt())
}

/// Settings of one Control pulse acting on the dot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPulse<T> {
    pub beta: T,
    pub photons: T,
    pub duration: T,
    pub dt: T,
}

/// Everything needed to evaluate the pumping outcome at one (T, n_c) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpingModel<T> {
    pub gamma1: T,
    pub gamma2: T,
    pub law: SpinFlipLaw<T>,
    pub initial: Populations<T>,
}

/// Result of one Control pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpingOutcome<T> {
    pub xi_rate: T,
    pub omega: T,
    pub final_populations: Populations<T>,
    pub contrast: T,
}

impl<T: Real> PumpingModel<T> {
    pub fn run(&self, pulse: &ControlPulse<T>, temperature: T) -> Result<PumpingOutcome<T>> {
        let xi_rate = spin_flip_rate(&self.law, temperature)?;
        let omega = control_rate(pulse.beta, pulse.photons, pulse.duration)?;
        let rates = RateParams::new(omega, self.gamma1, self.gamma2, xi_rate)?;
        let fin = integrate(&self.initial, &rates, pulse.duration, pulse.dt)?;
        let contrast = switching_contrast(self.initial.n_gbar, fin.n_gbar.max(T::zero()))?;
        Ok(PumpingOutcome {
            xi_rate,
            omega,
            final_populations: fin,
            contrast,
        })
    }
}
