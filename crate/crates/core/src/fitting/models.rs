//! Lineshapes used to read off peak phases and cavity parameters.

use crate::error::{Error, Result};
use crate::fitting::lm::{least_squares, FitResult, LsOptions, Model};
use crate::fitting::DataSeries;
use crate::scalar::{lit, Real};

/// `a·exp(−(x − c)²/(2σ²)) + o`, parameters `[amplitude, center, sigma, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gaussian;

impl Gaussian {
    /// Analytic partial derivatives, same parameter order as the model.
    pub fn gradient<T: Real>(&self, x: T, p: &[T]) -> [T; 4] {
        let (a, c, s) = (p[0], p[1], p[2]);
        let u = (x - c) / s;
        let e = (-u * u * lit(0.5)).exp();
        [e, a * e * u / s, a * e * u * u / s, T::one()]
    }
}

impl<T: Real> Model<T> for Gaussian {
    fn parameter_names(&self) -> Vec<&'static str> {
        vec!["amplitude", "center", "sigma", "offset"]
    }

    fn eval(&self, x: T, p: &[T]) -> T {
        let u = (x - p[1]) / p[2];
        p[0] * (-u * u * lit(0.5)).exp() + p[3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Background {
    #[default]
    Flat,
    /// Linear in `x` about a pivot.
    Sloped,
}

/// Reflectivity dip of a single-sided cavity,
/// `B(x)·((1 − 2α)² + u²)/(1 + u²)` with `u = 2(x − c)/κ`.
///
/// Parameters are `[center, kappa, alpha, background]`, plus `slope` for a
/// sloped background, where `B(x) = background + slope·(x − pivot)`.
#[derive(Debug, Clone, Copy)]
pub struct LorentzianDip<T> {
    pub background: Background,
    pub pivot: T,
}

impl<T: Real> Model<T> for LorentzianDip<T> {
    fn parameter_names(&self) -> Vec<&'static str> {
        match self.background {
            Background::Flat => vec!["center", "kappa", "alpha", "background"],
            Background::Sloped => vec!["center", "kappa", "alpha", "background", "slope"],
        }
    }

    fn eval(&self, x: T, p: &[T]) -> T {
        let u = lit::<T>(2.0) * (x - p[0]) / p[1];
        let depth = T::one() - lit::<T>(2.0) * p[2];
        let shape = (depth * depth + u * u) / (T::one() + u * u);
        let base = match self.background {
            Background::Flat => p[3],
            Background::Sloped => p[3] + p[4] * (x - self.pivot),
        };
        base * shape
    }
}

fn edge_mean<T: Real>(y: &[T]) -> T {
    let k = (y.len() / 10).max(1);
    let head = y.iter().take(k).copied();
    let tail = y.iter().rev().take(k).copied();
    let sum = head.chain(tail).fold(T::zero(), |a, b| a + b);
    sum / T::from_usize(2 * k).unwrap()
}

/// Width of the region around `peak` where `y` stays beyond `level`
/// (on the same side of `level` as the peak), with linear interpolation at
/// the crossings. `None` if either crossing is missing.
fn crossing_width<T: Real>(x: &[T], y: &[T], peak: usize, level: T, above: bool) -> Option<T> {
    let inside = |v: T| if above { v >= level } else { v <= level };
    let interp = |i: usize, j: usize| {
        let (x0, x1, y0, y1) = (x[i], x[j], y[i], y[j]);
        if y1 == y0 {
            x0
        } else {
            x0 + (level - y0) * (x1 - x0) / (y1 - y0)
        }
    };
    let mut lo = None;
    for i in (0..peak).rev() {
        if !inside(y[i]) {
            lo = Some(interp(i, i + 1));
            break;
        }
    }
    let mut hi = None;
    for i in peak + 1..y.len() {
        if !inside(y[i]) {
            hi = Some(interp(i - 1, i));
            break;
        }
    }
    Some(hi? - lo?)
}

/// Deterministic starting point for [`fit_gaussian`].
///
/// Offset from the mean of the outer 10% of points on each side, center at
/// the extremum that deviates most from it, sigma from the half-maximum
/// crossings (FWHM/2.3548), falling back to a quarter of the span.
pub fn gaussian_initial_guess<T: Real>(d: &DataSeries<T>) -> [T; 4] {
    let (x, y) = (d.x(), d.y());
    let offset = edge_mean(y);
    let (imax, _) = y.iter().enumerate().fold((0, y[0]), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let (imin, _) = y.iter().enumerate().fold((0, y[0]), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let (peak, above) = if (y[imax] - offset).abs() >= (offset - y[imin]).abs() {
        (imax, true)
    } else {
        (imin, false)
    };
    let amplitude = y[peak] - offset;
    let span = x[x.len() - 1] - x[0];
    let fallback = span / lit(4.0);
    let sigma = if amplitude == T::zero() {
        fallback
    } else {
        crossing_width(x, y, peak, offset + amplitude * lit(0.5), above)
            .filter(|w| *w > T::zero())
            .map(|w| w / lit(2.354_820_045))
            .unwrap_or(fallback)
    };
    let sigma = if sigma > T::zero() { sigma } else { T::one() };
    [amplitude, x[peak], sigma, offset]
}

/// Gaussian fit; `offset + amplitude` is the fitted peak value.
pub fn fit_gaussian<T: Real>(d: &DataSeries<T>) -> Result<FitResult<T>> {
    let p0 = gaussian_initial_guess(d);
    let mut fit = least_squares(&Gaussian, d, &p0, &LsOptions::default())?.into_converged()?;
    fit.params[2] = fit.params[2].abs();
    Ok(fit)
}

/// Deterministic starting point for [`fit_lorentzian_dip`].
///
/// Background from the outer points, center at the minimum, α on the
/// over-coupled branch `(1 + √(min/B))/2`, κ from the half-depth crossings.
pub fn lorentzian_initial_guess<T: Real>(d: &DataSeries<T>) -> [T; 4] {
    let (x, y) = (d.x(), d.y());
    let background = edge_mean(y);
    let (imin, ymin) = y.iter().enumerate().fold((0, y[0]), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let ratio = if background > T::zero() {
        (ymin / background).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let alpha = (T::one() + ratio.sqrt()) * lit(0.5);
    let half_level = background - (background - ymin) * lit(0.5);
    let span = x[x.len() - 1] - x[0];
    let kappa = crossing_width(x, y, imin, half_level, false)
        .filter(|w| *w > T::zero())
        .unwrap_or(span / lit(2.0));
    [x[imin], kappa, alpha, background]
}

pub fn fit_lorentzian_dip<T: Real>(d: &DataSeries<T>) -> Result<FitResult<T>> {
    fit_lorentzian_dip_with(d, Background::Flat)
}

/// Dip fit with a chosen background model. `kappa` is reported as its magnitude.
pub fn fit_lorentzian_dip_with<T: Real>(d: &DataSeries<T>, background: Background) -> Result<FitResult<T>> {
    if d.len() < 5 {
        return Err(Error::invalid("data", "a dip fit needs at least 5 points"));
    }
    let guess = lorentzian_initial_guess(d);
    if !(guess[3] > T::zero()) {
        return Err(Error::invalid("data", "no positive background level to fit a dip against"));
    }
    let x = d.x();
    let pivot = (x[0] + x[x.len() - 1]) * lit(0.5);
    let model = LorentzianDip { background, pivot };
    let mut p0 = guess.to_vec();
    if background == Background::Sloped {
        p0.push(T::zero());
    }
    let mut fit = least_squares(&model, d, &p0, &LsOptions::default())?.into_converged()?;
    fit.params[1] = fit.params[1].abs();
    Ok(fit)
}
