//! Jones vectors in the H/V basis, circular decomposition and the
//! contrast-derived photon phase shift.
//!
//! Handedness is fixed operationally: RCP is the state `(|H⟩ + i|V⟩)/√2`,
//! which gives `I_R = 1`. Only the R/L contrast enters any result.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState<T> {
    pub a_h: Complex<T>,
    pub a_v: Complex<T>,
}

impl<T: Real> PolarizationState<T> {
    pub fn new(a_h: Complex<T>, a_v: Complex<T>) -> Self {
        Self { a_h, a_v }
    }

    /// `(|H⟩ + i|V⟩)/√2`.
    pub fn rcp() -> Self {
        let s = T::FRAC_1_SQRT_2();
        Self::new(Complex::new(s, T::zero()), Complex::new(T::zero(), s))
    }

    /// `(|H⟩ − i|V⟩)/√2`.
    pub fn lcp() -> Self {
        let s = T::FRAC_1_SQRT_2();
        Self::new(Complex::new(s, T::zero()), Complex::new(T::zero(), -s))
    }

    pub fn norm_sqr(&self) -> T {
        self.a_h.norm_sqr() + self.a_v.norm_sqr()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::invalid("state", "cannot normalize a zero or non-finite state"));
        }
        let s = n.sqrt().recip();
        Ok(self.scaled(Complex::from(s)))
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self::new(self.a_h * c, self.a_v * c)
    }
}

/// Scattered intensities in the right and left circular channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularIntensities<T> {
    pub i_r: T,
    pub i_l: T,
}

impl<T: Real> CircularIntensities<T> {
    pub fn total(&self) -> T {
        self.i_r + self.i_l
    }

    /// `P = (I_R − I_L)/(I_R + I_L)`.
    pub fn contrast(&self) -> Result<T> {
        let total = self.total();
        if !(total > T::zero()) {
            return Err(Error::UndefinedContrast("I_R + I_L is zero"));
        }
        Ok((self.i_r - self.i_l) / total)
    }

    /// Incoherent mixture `w·a + (1−w)·b`.
    pub fn mix(weight: T, a: Self, b: Self) -> Self {
        let rest = T::one() - weight;
        Self {
            i_r: weight * a.i_r + rest * b.i_r,
            i_l: weight * a.i_l + rest * b.i_l,
        }
    }
}

/// Nominally right-circular input with an admixed left-circular amplitude.
///
/// `ε = 0` is ideal RCP and `ε = 1` is pure LCP; in between the state is
/// `√(1−ε²)·|R⟩ + ε·|L⟩`, which is already normalized.
pub fn rcp_input<T: Real>(ellipticity: T) -> Result<PolarizationState<T>> {
    if !(ellipticity >= T::zero() && ellipticity <= T::one()) {
        return Err(Error::invalid(
            "ellipticity",
            format!("must lie in [0, 1], got {ellipticity}"),
        ));
    }
    let r = PolarizationState::<T>::rcp();
    let l = PolarizationState::<T>::lcp();
    let keep = (T::one() - ellipticity * ellipticity).max(T::zero()).sqrt();
    Ok(PolarizationState::new(
        r.a_h * keep + l.a_h * ellipticity,
        r.a_v * keep + l.a_v * ellipticity,
    ))
}

/// Applies per-mode reflection. Loss is kept, the state is not renormalized.
pub fn reflect_state<T: Real>(s: &PolarizationState<T>, r_h: Complex<T>, r_v: Complex<T>) -> PolarizationState<T> {
    PolarizationState::new(s.a_h * r_h, s.a_v * r_v)
}

pub fn circular_intensities<T: Real>(s: &PolarizationState<T>) -> CircularIntensities<T> {
    let k = T::FRAC_1_SQRT_2();
    let i = Complex::<T>::i();
    let right = (s.a_h - i * s.a_v) * k;
    let left = (s.a_h + i * s.a_v) * k;
    CircularIntensities {
        i_r: right.norm_sqr(),
        i_l: left.norm_sqr(),
    }
}

/// Photon phase shift `arccos P` in degrees.
pub fn phase_shift<T: Real>(c: &CircularIntensities<T>) -> Result<T> {
    let p = c.contrast()?;
    Ok(phase_from_contrast(p))
}

/// `arccos` of a contrast, clamped to [−1, 1], in degrees.
pub fn phase_from_contrast<T: Real>(p: T) -> T {
    p.max(-T::one()).min(T::one()).acos().to_degrees()
}

/// Contrast giving `phase_deg`; inverse of [`phase_from_contrast`].
pub fn contrast_from_phase<T: Real>(phase_deg: T) -> T {
    phase_deg.to_radians().cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn circular_convention_anchors() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = circular_intensities(&PolarizationState::new(c(s, 0.0), c(0.0, s)));
        assert_abs_diff_eq!(r.i_r, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.i_l, 0.0, epsilon = 1e-15);

        let h = circular_intensities(&PolarizationState::new(c(1.0, 0.0), c(0.0, 0.0)));
        assert_abs_diff_eq!(h.i_r, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(h.i_l, 0.5, epsilon = 1e-15);

        let l = circular_intensities(&PolarizationState::new(c(s, 0.0), c(0.0, -s)));
        assert_abs_diff_eq!(l.i_r, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.i_l, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rcp_input_limits() {
        let ideal = rcp_input(0.0).unwrap();
        assert_eq!(ideal, PolarizationState::rcp());
        let swapped = circular_intensities(&rcp_input(1.0).unwrap());
        assert_abs_diff_eq!(swapped.i_r, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(swapped.i_l, 1.0, epsilon = 1e-15);
        assert!(rcp_input(-0.1).is_err());
        assert!(rcp_input(1.1).is_err());
        assert!(rcp_input(f64::NAN).is_err());
        for eps in [0.1, 0.4, 0.9] {
            assert_abs_diff_eq!(rcp_input(eps).unwrap().norm_sqr(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reflect_examples() {
        let s = PolarizationState::rcp();
        assert_eq!(reflect_state(&s, c(1.0, 0.0), c(1.0, 0.0)), s);

        let flipped = circular_intensities(&reflect_state(&s, c(1.0, 0.0), c(-1.0, 0.0)));
        assert_abs_diff_eq!(flipped.i_r, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(flipped.i_l, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phase_shift(&flipped).unwrap(), 180.0, epsilon = 1e-12);

        // (1/√2, 0) splits into 1/4 + 1/4
        let blocked = circular_intensities(&reflect_state(&s, c(1.0, 0.0), c(0.0, 0.0)));
        assert_abs_diff_eq!(blocked.i_r, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(blocked.i_l, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(blocked.contrast().unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phase_shift(&blocked).unwrap(), 90.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_examples() {
        let at = |p: f64| phase_shift(&CircularIntensities { i_r: (1.0 + p) / 2.0, i_l: (1.0 - p) / 2.0 }).unwrap();
        assert_eq!(at(1.0), 0.0);
        assert_abs_diff_eq!(at(0.0), 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at(-1.0), 180.0, epsilon = 1e-12);
        assert!((at(0.17365) - 80.0).abs() < 0.01);
        assert_eq!(
            phase_shift(&CircularIntensities { i_r: 0.0, i_l: 0.0 }),
            Err(Error::UndefinedContrast("I_R + I_L is zero"))
        );
        assert_abs_diff_eq!(contrast_from_phase(phase_from_contrast(0.3)), 0.3, epsilon = 1e-14);
    }

    #[test]
    fn phase_is_monotone_in_contrast() {
        let mut last = f64::INFINITY;
        for i in 0..=200 {
            let p = -1.0 + i as f64 / 100.0;
            let ph = phase_from_contrast(p);
            assert!(ph < last || i == 0);
            last = ph;
        }
    }

    proptest! {
        #[test]
        fn intensities_conserve_norm(hr in -2.0f64..2.0, hi in -2.0f64..2.0, vr in -2.0f64..2.0, vi in -2.0f64..2.0) {
            let s = PolarizationState::new(c(hr, hi), c(vr, vi));
            let ci = circular_intensities(&s);
            prop_assert!((ci.total() - s.norm_sqr()).abs() <= 1e-12 * s.norm_sqr().max(1.0));
        }

        #[test]
        fn reflection_is_linear(
            eps in 0.0f64..1.0,
            rh in -1.0f64..1.0, rhi in -1.0f64..1.0,
            rv in -1.0f64..1.0, rvi in -1.0f64..1.0,
            kr in 0.1f64..3.0, ki in -3.0f64..3.0,
        ) {
            let s = rcp_input(eps).unwrap();
            let k = c(kr, ki);
            let a = circular_intensities(&reflect_state(&s, c(rh, rhi), c(rv, rvi)));
            let b = circular_intensities(&reflect_state(&s.scaled(k), c(rh, rhi), c(rv, rvi)));
            let k2 = k.norm_sqr();
            prop_assert!((b.i_r - k2 * a.i_r).abs() < 1e-10 * k2.max(1.0));
            prop_assert!((b.i_l - k2 * a.i_l).abs() < 1e-10 * k2.max(1.0));
            if a.total() > 1e-9 {
                prop_assert!((phase_shift(&a).unwrap() - phase_shift(&b).unwrap()).abs() < 1e-6);
            }
        }

        #[test]
        fn real_reflection_contrast_closed_form(r in -1.0f64..=1.0) {
            let out = circular_intensities(&reflect_state(&PolarizationState::rcp(), c(1.0, 0.0), c(r, 0.0)));
            let p = out.contrast().unwrap();
            prop_assert!((p - 2.0 * r / (1.0 + r * r)).abs() < 1e-12);
        }
    }
}
