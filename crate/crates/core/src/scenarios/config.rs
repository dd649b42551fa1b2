//! Flat experiment configuration with dotted keys and the device defaults.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fitting::Background;

/// A constant that is either given or derived by a calibration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Calibrated {
    Auto,
    Value(f64),
}

impl Calibrated {
    pub fn value(self) -> Option<f64> {
        match self {
            Calibrated::Auto => None,
            Calibrated::Value(v) => Some(v),
        }
    }
}

/// How the Target photon number reduces the phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SaturationModel {
    /// `φ_max` times the normalized coherent fraction.
    #[default]
    Multiplicative,
    /// Recompute the spectrum with the emitter weight reduced by the coherent fraction.
    Jones,
}

/// Sweep values plus the text they were parsed from.
///
/// Accepts `start:stop:step` (stop included when hit to within 1e-9 of a
/// step) or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    spec: String,
    values: Vec<f64>,
}

impl Sweep {
    pub fn parse(name: &'static str, text: &str) -> Result<Self> {
        let text = text.trim();
        let values = if text.contains(':') {
            let parts: Vec<&str> = text.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::invalid(name, format!("range must be start:stop:step, got `{text}`")));
            }
            let num = |s: &str| parse_f64(name, s);
            let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || stop < start {
                return Err(Error::invalid(name, format!("need start <= stop and step > 0, got `{text}`")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            if n > 1_000_000 {
                return Err(Error::invalid(name, format!("range `{text}` has more than 1e6 points")));
            }
            (0..=n).map(|i| start + step * i as f64).collect()
        } else {
            text.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_f64(name, s))
                .collect::<Result<Vec<_>>>()?
        };
        if values.is_empty() {
            return Err(Error::invalid(name, "sweep is empty"));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(name, "sweep values must be strictly increasing"));
        }
        Ok(Self {
            spec: text.to_string(),
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }
}

/// Every parameter of a simulated run. Energies in μeV, times in ns,
/// rates in ns⁻¹, temperatures in K, phases in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,

    pub cavity_alpha: f64,
    pub cavity_q: f64,
    pub cavity_wavelength: f64,
    /// H-mode center relative to the V mode.
    pub cavity_split: f64,

    pub emitter_cooperativity: f64,
    /// Transition center relative to the V mode.
    pub emitter_detuning: f64,
    pub emitter_t1: f64,
    pub emitter_t2: f64,

    pub spin_gamma1: f64,
    pub spin_gamma2: f64,
    pub spin_a: f64,
    pub spin_ez: f64,
    pub spin_temperature: f64,
    pub spin_initial: [f64; 3],

    pub phase_ellipticity: Calibrated,
    pub phase_baseline: f64,
    pub phase_anchor: f64,
    pub phase_anchor_photons: f64,
    pub phase_photon_to_s: Calibrated,
    pub phase_saturation: SaturationModel,

    pub target_photons: f64,

    pub control_photons: f64,
    pub control_duration: f64,
    pub control_dt: f64,
    pub control_beta: Calibrated,
    pub control_ratio: f64,
    pub control_calibration_photons: f64,
    pub control_calibration_temperature: f64,

    pub pulse_rep_period: f64,
    pub pulse_inject_width: f64,
    pub pulse_target_width: f64,

    pub sweep_detuning: Sweep,
    pub sweep_target_photons: Sweep,
    pub sweep_control_photons: Sweep,
    pub sweep_temperatures: Sweep,
    pub sweep_fit_detuning: Sweep,

    pub jitter_sigma: f64,
    pub jitter_fwhm: f64,

    pub fit_noise: f64,
    pub fit_seed: u64,
    pub fit_background: Background,

    pub field: f64,
}

/// Every recognised key, in canonical order.
pub const KEYS: &[&str] = &[
    "name",
    "cavity.alpha",
    "cavity.q",
    "cavity.wavelength",
    "cavity.split",
    "emitter.cooperativity",
    "emitter.detuning",
    "emitter.t1",
    "emitter.t2",
    "spin.gamma1",
    "spin.gamma2",
    "spin.a",
    "spin.ez",
    "spin.temperature",
    "spin.initial",
    "phase.ellipticity",
    "phase.baseline",
    "phase.anchor",
    "phase.anchor_photons",
    "phase.photon_to_s",
    "phase.saturation",
    "target.photons",
    "control.photons",
    "control.duration",
    "control.dt",
    "control.beta",
    "control.ratio",
    "control.calibration_photons",
    "control.calibration_temperature",
    "pulse.rep_period",
    "pulse.inject_width",
    "pulse.target_width",
    "sweep.detuning",
    "sweep.target_photons",
    "sweep.control_photons",
    "sweep.temperatures",
    "sweep.fit_detuning",
    "jitter.sigma",
    "jitter.fwhm",
    "fit.noise",
    "fit.seed",
    "fit.background",
    "field",
];

fn parse_f64(name: &'static str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::invalid(name, format!("expected a number, got `{}`", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::invalid(name, format!("must be finite, got `{}`", s.trim())));
    }
    Ok(v)
}

fn parse_calibrated(name: &'static str, s: &str) -> Result<Calibrated> {
    if s.trim().eq_ignore_ascii_case("auto") {
        Ok(Calibrated::Auto)
    } else {
        parse_f64(name, s).map(Calibrated::Value)
    }
}

fn show_calibrated(c: Calibrated) -> String {
    match c {
        Calibrated::Auto => "auto".into(),
        Calibrated::Value(v) => v.to_string(),
    }
}

fn sweep(name: &'static str, text: &str) -> Sweep {
    Sweep::parse(name, text).expect("default sweep parses")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            cavity_alpha: 0.93,
            cavity_q: 5000.0,
            cavity_wavelength: 934.55,
            cavity_split: 6.0,
            emitter_cooperativity: 1.0,
            emitter_detuning: 0.0,
            emitter_t1: 0.5,
            emitter_t2: 1.0,
            spin_gamma1: 1.2,
            spin_gamma2: 1.0,
            spin_a: 0.6,
            spin_ez: 400.0,
            spin_temperature: 18.0,
            spin_initial: [0.5, 0.5, 0.0],
            phase_ellipticity: Calibrated::Auto,
            phase_baseline: 78.0,
            phase_anchor: 80.0,
            phase_anchor_photons: 1.0,
            phase_photon_to_s: Calibrated::Auto,
            phase_saturation: SaturationModel::Multiplicative,
            target_photons: 12.0,
            control_photons: 940.0,
            control_duration: 7.0,
            control_dt: 0.001,
            control_beta: Calibrated::Auto,
            control_ratio: 0.46,
            control_calibration_photons: 940.0,
            control_calibration_temperature: 18.0,
            pulse_rep_period: 12.5,
            pulse_inject_width: 1.0,
            pulse_target_width: 0.25,
            sweep_detuning: sweep("sweep.detuning", "-30:30:0.25"),
            sweep_target_photons: sweep("sweep.target_photons", "1,2,4,6,8,12,16,24,32,48,64,96,128"),
            sweep_control_photons: sweep("sweep.control_photons", "0:940:20"),
            sweep_temperatures: sweep("sweep.temperatures", "0,5,10,18,25"),
            sweep_fit_detuning: sweep("sweep.fit_detuning", "-800:800:4"),
            jitter_sigma: 0.0,
            jitter_fwhm: 10.0,
            fit_noise: 0.0,
            fit_seed: 1,
            fit_background: Background::Flat,
            field: 8.0,
        }
    }
}

impl ExperimentConfig {
    /// Sets one key from its text value. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let name: &'static str = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| Error::invalid("key", format!("unknown key `{key}`")))?;
        let v = value.trim();
        if v.is_empty() {
            return Err(Error::invalid(name, "missing value"));
        }
        let num = || parse_f64(name, v);
        match name {
            "name" => self.name = v.to_string(),
            "cavity.alpha" => self.cavity_alpha = num()?,
            "cavity.q" => self.cavity_q = num()?,
            "cavity.wavelength" => self.cavity_wavelength = num()?,
            "cavity.split" => self.cavity_split = num()?,
            "emitter.cooperativity" => self.emitter_cooperativity = num()?,
            "emitter.detuning" => self.emitter_detuning = num()?,
            "emitter.t1" => self.emitter_t1 = num()?,
            "emitter.t2" => self.emitter_t2 = num()?,
            "spin.gamma1" => self.spin_gamma1 = num()?,
            "spin.gamma2" => self.spin_gamma2 = num()?,
            "spin.a" => self.spin_a = num()?,
            "spin.ez" => self.spin_ez = num()?,
            "spin.temperature" => self.spin_temperature = num()?,
            "spin.initial" => {
                let parts: Vec<f64> = v.split(',').map(|s| parse_f64(name, s)).collect::<Result<_>>()?;
                if parts.len() != 3 {
                    return Err(Error::invalid(name, "expected three populations `n_gbar,n_g,n_tbar`"));
                }
                self.spin_initial = [parts[0], parts[1], parts[2]];
            }
            "phase.ellipticity" => self.phase_ellipticity = parse_calibrated(name, v)?,
            "phase.baseline" => self.phase_baseline = num()?,
            "phase.anchor" => self.phase_anchor = num()?,
            "phase.anchor_photons" => self.phase_anchor_photons = num()?,
            "phase.photon_to_s" => self.phase_photon_to_s = parse_calibrated(name, v)?,
            "phase.saturation" => {
                self.phase_saturation = match v {
                    "multiplicative" => SaturationModel::Multiplicative,
                    "jones" => SaturationModel::Jones,
                    _ => return Err(Error::invalid(name, format!("expected multiplicative|jones, got `{v}`"))),
                }
            }
            "target.photons" => self.target_photons = num()?,
            "control.photons" => self.control_photons = num()?,
            "control.duration" => self.control_duration = num()?,
            "control.dt" => self.control_dt = num()?,
            "control.beta" => self.control_beta = parse_calibrated(name, v)?,
            "control.ratio" => self.control_ratio = num()?,
            "control.calibration_photons" => self.control_calibration_photons = num()?,
            "control.calibration_temperature" => self.control_calibration_temperature = num()?,
            "pulse.rep_period" => self.pulse_rep_period = num()?,
            "pulse.inject_width" => self.pulse_inject_width = num()?,
            "pulse.target_width" => self.pulse_target_width = num()?,
            "sweep.detuning" => self.sweep_detuning = Sweep::parse(name, v)?,
            "sweep.target_photons" => self.sweep_target_photons = Sweep::parse(name, v)?,
            "sweep.control_photons" => self.sweep_control_photons = Sweep::parse(name, v)?,
            "sweep.temperatures" => self.sweep_temperatures = Sweep::parse(name, v)?,
            "sweep.fit_detuning" => self.sweep_fit_detuning = Sweep::parse(name, v)?,
            "jitter.sigma" => self.jitter_sigma = num()?,
            "jitter.fwhm" => self.jitter_fwhm = num()?,
            "fit.noise" => self.fit_noise = num()?,
            "fit.seed" => {
                self.fit_seed = v
                    .parse()
                    .map_err(|_| Error::invalid(name, format!("expected a non-negative integer, got `{v}`")))?
            }
            "fit.background" => {
                self.fit_background = match v {
                    "flat" => Background::Flat,
                    "sloped" => Background::Sloped,
                    _ => return Err(Error::invalid(name, format!("expected flat|sloped, got `{v}`"))),
                }
            }
            "field" => self.field = num()?,
            _ => unreachable!("key table and match arms disagree on `{name}`"),
        }
        Ok(())
    }

    /// Text value of `key` as [`set`](Self::set) would accept it.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "name" => self.name.clone(),
            "cavity.alpha" => self.cavity_alpha.to_string(),
            "cavity.q" => self.cavity_q.to_string(),
            "cavity.wavelength" => self.cavity_wavelength.to_string(),
            "cavity.split" => self.cavity_split.to_string(),
            "emitter.cooperativity" => self.emitter_cooperativity.to_string(),
            "emitter.detuning" => self.emitter_detuning.to_string(),
            "emitter.t1" => self.emitter_t1.to_string(),
            "emitter.t2" => self.emitter_t2.to_string(),
            "spin.gamma1" => self.spin_gamma1.to_string(),
            "spin.gamma2" => self.spin_gamma2.to_string(),
            "spin.a" => self.spin_a.to_string(),
            "spin.ez" => self.spin_ez.to_string(),
            "spin.temperature" => self.spin_temperature.to_string(),
            "spin.initial" => format!("{},{},{}", self.spin_initial[0], self.spin_initial[1], self.spin_initial[2]),
            "phase.ellipticity" => show_calibrated(self.phase_ellipticity),
            "phase.baseline" => self.phase_baseline.to_string(),
            "phase.anchor" => self.phase_anchor.to_string(),
            "phase.anchor_photons" => self.phase_anchor_photons.to_string(),
            "phase.photon_to_s" => show_calibrated(self.phase_photon_to_s),
            "phase.saturation" => match self.phase_saturation {
                SaturationModel::Multiplicative => "multiplicative".into(),
                SaturationModel::Jones => "jones".into(),
            },
            "target.photons" => self.target_photons.to_string(),
            "control.photons" => self.control_photons.to_string(),
            "control.duration" => self.control_duration.to_string(),
            "control.dt" => self.control_dt.to_string(),
            "control.beta" => show_calibrated(self.control_beta),
            "control.ratio" => self.control_ratio.to_string(),
            "control.calibration_photons" => self.control_calibration_photons.to_string(),
            "control.calibration_temperature" => self.control_calibration_temperature.to_string(),
            "pulse.rep_period" => self.pulse_rep_period.to_string(),
            "pulse.inject_width" => self.pulse_inject_width.to_string(),
            "pulse.target_width" => self.pulse_target_width.to_string(),
            "sweep.detuning" => self.sweep_detuning.spec().to_string(),
            "sweep.target_photons" => self.sweep_target_photons.spec().to_string(),
            "sweep.control_photons" => self.sweep_control_photons.spec().to_string(),
            "sweep.temperatures" => self.sweep_temperatures.spec().to_string(),
            "sweep.fit_detuning" => self.sweep_fit_detuning.spec().to_string(),
            "jitter.sigma" => self.jitter_sigma.to_string(),
            "jitter.fwhm" => self.jitter_fwhm.to_string(),
            "fit.noise" => self.fit_noise.to_string(),
            "fit.seed" => self.fit_seed.to_string(),
            "fit.background" => match self.fit_background {
                Background::Flat => "flat".into(),
                Background::Sloped => "sloped".into(),
            },
            "field" => self.field.to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// All keys as `key = value` lines in canonical order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            writeln!(out, "{key} = {}", self.get(key).expect("every key has a value")).unwrap();
        }
        out
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Checks every invariant that does not need a calibration run.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be > 0, got {v}")))
            }
        }
        fn non_negative(name: &'static str, v: f64) -> Result<()> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be >= 0, got {v}")))
            }
        }
        if !(self.cavity_alpha > 0.0 && self.cavity_alpha <= 1.0) {
            return Err(Error::invalid("cavity.alpha", format!("must lie in (0, 1], got {}", self.cavity_alpha)));
        }
        positive("cavity.q", self.cavity_q)?;
        positive("cavity.wavelength", self.cavity_wavelength)?;
        for (name, v) in [("cavity.split", self.cavity_split), ("emitter.detuning", self.emitter_detuning)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        non_negative("emitter.cooperativity", self.emitter_cooperativity)?;
        positive("emitter.t1", self.emitter_t1)?;
        if !(self.emitter_t2 > 0.0 && self.emitter_t2 <= 2.0 * self.emitter_t1) {
            return Err(Error::invalid(
                "emitter.t2",
                format!("must satisfy 0 < t2 <= 2*t1, got {}", self.emitter_t2),
            ));
        }
        non_negative("spin.gamma1", self.spin_gamma1)?;
        non_negative("spin.gamma2", self.spin_gamma2)?;
        non_negative("spin.a", self.spin_a)?;
        positive("spin.ez", self.spin_ez)?;
        non_negative("spin.temperature", self.spin_temperature)?;
        let p = self.spin_initial;
        if p.iter().any(|v| !(*v >= 0.0 && *v <= 1.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("spin.initial", "populations must lie in [0, 1] and sum to 1"));
        }
        if p[0] == 0.0 {
            return Err(Error::invalid("spin.initial", "n_gbar must be > 0 for a defined switching contrast"));
        }
        if let Calibrated::Value(e) = self.phase_ellipticity {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::invalid("phase.ellipticity", format!("must lie in [0, 1], got {e}")));
            }
        }
        if !(self.phase_baseline > 0.0 && self.phase_baseline < 180.0) {
            return Err(Error::invalid("phase.baseline", "must lie in (0, 180) degrees"));
        }
        if !(self.phase_anchor > 0.0 && self.phase_anchor < 180.0) {
            return Err(Error::invalid("phase.anchor", "must lie in (0, 180) degrees"));
        }
        positive("phase.anchor_photons", self.phase_anchor_photons)?;
        if let Calibrated::Value(k) = self.phase_photon_to_s {
            positive("phase.photon_to_s", k)?;
        }
        non_negative("target.photons", self.target_photons)?;
        non_negative("control.photons", self.control_photons)?;
        positive("control.duration", self.control_duration)?;
        positive("control.dt", self.control_dt)?;
        if self.control_dt > self.control_duration {
            return Err(Error::invalid("control.dt", "must not exceed control.duration"));
        }
        if let Calibrated::Value(b) = self.control_beta {
            non_negative("control.beta", b)?;
        }
        if !(self.control_ratio > 0.0 && self.control_ratio < 1.0) {
            return Err(Error::invalid("control.ratio", format!("must lie in (0, 1), got {}", self.control_ratio)));
        }
        positive("control.calibration_photons", self.control_calibration_photons)?;
        non_negative("control.calibration_temperature", self.control_calibration_temperature)?;
        positive("pulse.rep_period", self.pulse_rep_period)?;
        positive("pulse.inject_width", self.pulse_inject_width)?;
        positive("pulse.target_width", self.pulse_target_width)?;
        let windows = self.pulse_inject_width + self.control_duration + self.pulse_target_width;
        if !(self.pulse_rep_period > windows) {
            return Err(Error::invalid(
                "pulse.rep_period",
                format!(
                    "{} ns does not exceed the summed pulse windows ({windows} ns)",
                    self.pulse_rep_period
                ),
            ));
        }
        if self.sweep_target_photons.values().iter().any(|n| !(*n > 0.0)) {
            return Err(Error::invalid("sweep.target_photons", "photon numbers must be > 0"));
        }
        if self.sweep_control_photons.values().iter().any(|n| *n < 0.0) {
            return Err(Error::invalid("sweep.control_photons", "photon numbers must be >= 0"));
        }
        if self.sweep_temperatures.values().iter().any(|t| *t < 0.0) {
            return Err(Error::invalid("sweep.temperatures", "temperatures must be >= 0 K"));
        }
        if self.sweep_detuning.values().len() < 5 {
            return Err(Error::invalid("sweep.detuning", "need at least 5 points for the peak fit"));
        }
        if self.sweep_fit_detuning.values().len() < 6 {
            return Err(Error::invalid("sweep.fit_detuning", "need at least 6 points for a dip fit"));
        }
        non_negative("jitter.sigma", self.jitter_sigma)?;
        positive("jitter.fwhm", self.jitter_fwhm)?;
        non_negative("fit.noise", self.fit_noise)?;
        non_negative("field", self.field)?;
        Ok(())
    }
}
