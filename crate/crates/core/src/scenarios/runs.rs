use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::cavity::{reflection_coefficient, CavityMode, EmitterCoupling, ModeLabel};
use crate::error::{Error, Result};
use crate::fitting::{
    bisect, calibrate_beta, fit_gaussian, fit_lorentzian_dip_with, least_squares, DataSeries, FitResult,
    LorentzianDip, LsOptions, Model,
};
use crate::polarimetry::{circular_intensities, phase_shift, rcp_input, reflect_state, CircularIntensities};
use crate::saturation::{photon_to_s_for_anchor, saturation_from_anchors, TwoLevelParams};
use crate::spindyn::{ControlPulse, PumpingModel, Populations, SpinFlipLaw};
use crate::trace::Trace;
use crate::units::{kappa_from_quality_factor, linewidth_from_lifetime, Energy};

use super::config::{Calibrated, ExperimentConfig, SaturationModel};

const JITTER_POINTS: usize = 241;
const JITTER_HALF_SPAN: f64 = 6.0;
const ELLIPTICITY_SCAN_STEP: f64 = 0.02;
const ELLIPTICITY_MAX: f64 = 0.98;

/// Constants fixed before any scenario runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub epsilon: f64,
    pub photon_to_s: f64,
    /// Zero-power peak phase, degrees.
    pub phi_max: f64,
    pub beta: f64,
}

/// The cavity, emitter and input polarization that produce the spectra.
#[derive(Debug, Clone)]
struct Optics {
    h_mode: CavityMode<f64>,
    v_mode: CavityMode<f64>,
    emitter: EmitterCoupling<f64>,
    /// Emitter-center offsets and their normalized weights; empty without jitter.
    jitter: Vec<(f64, f64)>,
}

impl Optics {
    fn new(c: &ExperimentConfig, jitter_sigma: f64) -> Result<Self> {
        let kappa = kappa_from_quality_factor(c.cavity_wavelength, c.cavity_q)?;
        let v_mode = CavityMode::with_alpha(Energy(0.0), kappa, c.cavity_alpha, ModeLabel::V)?;
        let h_mode = CavityMode::with_alpha(Energy(c.cavity_split), kappa, c.cavity_alpha, ModeLabel::H)?;
        let gamma = linewidth_from_lifetime(c.emitter_t1)?;
        let emitter =
            EmitterCoupling::with_cooperativity(c.emitter_cooperativity, &v_mode, gamma, Energy(c.emitter_detuning))?;
        Ok(Self {
            h_mode,
            v_mode,
            emitter,
            jitter: jitter_kernel(jitter_sigma),
        })
    }

    /// Circular intensities with emitter weight `w` mixed against the bare cavity.
    fn intensities(&self, x: f64, epsilon: f64, w: f64) -> Result<CircularIntensities<f64>> {
        let input = rcp_input(epsilon)?;
        let laser = Energy(x);
        let r_h = reflection_coefficient(laser, &self.h_mode, None);
        let through = |r_v: Complex<f64>| circular_intensities(&reflect_state(&input, r_h, r_v));
        let bare = through(reflection_coefficient(laser, &self.v_mode, None));
        let dressed = if self.jitter.is_empty() {
            through(reflection_coefficient(laser, &self.v_mode, Some(&self.emitter)))
        } else {
            let mut acc = CircularIntensities { i_r: 0.0, i_l: 0.0 };
            for &(offset, weight) in &self.jitter {
                let em = self.emitter.shifted(Energy(offset));
                let c = through(reflection_coefficient(laser, &self.v_mode, Some(&em)));
                acc.i_r += weight * c.i_r;
                acc.i_l += weight * c.i_l;
            }
            acc
        };
        Ok(CircularIntensities::mix(w, dressed, bare))
    }

    fn spectrum(&self, grid: &[f64], epsilon: f64, w: f64) -> Result<Vec<CircularIntensities<f64>>> {
        grid.par_iter().map(|&x| self.intensities(x, epsilon, w)).collect()
    }

    fn phase_spectrum(&self, grid: &[f64], epsilon: f64, w: f64) -> Result<Vec<f64>> {
        self.spectrum(grid, epsilon, w)?.iter().map(phase_shift).collect()
    }

    /// Gaussian fit of phase vs detuning.
    fn peak_fit(&self, grid: &[f64], epsilon: f64, w: f64) -> Result<FitResult<f64>> {
        let phases = self.phase_spectrum(grid, epsilon, w)?;
        fit_gaussian(&DataSeries::new(grid.to_vec(), phases, None)?)
    }

    fn peak_phase(&self, grid: &[f64], epsilon: f64, w: f64) -> Result<f64> {
        let fit = self.peak_fit(grid, epsilon, w)?;
        Ok(fit.params[0] + fit.params[3])
    }
}

/// Simpson weights times a Gaussian over `±6σ`, normalized to 1.
fn jitter_kernel(sigma: f64) -> Vec<(f64, f64)> {
    if sigma <= 0.0 {
        return Vec::new();
    }
    let n = JITTER_POINTS - 1;
    let h = 2.0 * JITTER_HALF_SPAN * sigma / n as f64;
    let raw: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let x = -JITTER_HALF_SPAN * sigma + h * i as f64;
            let simpson = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (x, simpson * (-0.5 * (x / sigma).powi(2)).exp())
        })
        .collect();
    let total: f64 = raw.iter().map(|p| p.1).sum();
    raw.into_iter().map(|(x, w)| (x, w / total)).collect()
}

/// `φ(n) = φ_anchor·(1 + k·n_anchor)/(1 + k·n)`; one parameter, `k`.
struct AnchoredSaturation {
    anchor: f64,
    anchor_photons: f64,
}

impl Model<f64> for AnchoredSaturation {
    fn parameter_names(&self) -> Vec<&'static str> {
        vec!["photon_to_s"]
    }

    fn eval(&self, n: f64, p: &[f64]) -> f64 {
        self.anchor * (1.0 + p[0] * self.anchor_photons) / (1.0 + p[0] * n)
    }
}

/// Least-squares `photon_to_s` for measured (photons, phase) points with
/// the anchor phase held fixed. Returns the fit and the RMS deviation in degrees.
pub fn refit_photon_to_s(
    measured: &DataSeries<f64>,
    anchor: f64,
    anchor_photons: f64,
    start: f64,
) -> Result<(FitResult<f64>, f64)> {
    let model = AnchoredSaturation { anchor, anchor_photons };
    let fit = least_squares(&model, measured, &[start], &LsOptions::default())?.into_converged()?;
    if !(fit.params[0] > 0.0) {
        return Err(Error::Calibration {
            quantity: "photon_to_s",
            reason: format!("measured data imply non-positive photon_to_s {}", fit.params[0]),
        });
    }
    let rms = (fit.residual_norm.powi(2) / measured.len() as f64).sqrt();
    Ok((fit, rms))
}

/// A configuration with every calibrated constant resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    optics: Optics,
    two_level: TwoLevelParams<f64>,
    pumping: PumpingModel<f64>,
    calibration: Calibration,
    measured_rms: Option<f64>,
    hash: String,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        Self::build(config, None)
    }

    /// Like [`new`](Self::new), refitting `photon_to_s` to measured
    /// (photons per Target pulse, phase) points.
    pub fn with_measured_saturation(config: ExperimentConfig, measured: &DataSeries<f64>) -> Result<Self> {
        Self::build(config, Some(measured))
    }

    fn build(config: ExperimentConfig, measured: Option<&DataSeries<f64>>) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let optics = Optics::new(c, c.jitter_sigma)?;
        let grid = c.sweep_detuning.values();
        let n0 = c.spin_initial[0];

        let anchors = || saturation_from_anchors(c.phase_anchor, c.phase_anchor_photons, c.phase_baseline, c.target_photons);
        let mut measured_rms = None;
        let (photon_to_s, phi_max, epsilon) = match (c.phase_ellipticity, measured) {
            (_, Some(m)) => {
                let start = match c.phase_photon_to_s {
                    Calibrated::Value(k) => k,
                    Calibrated::Auto => anchors().map(|a| a.0).unwrap_or(1e-3),
                };
                let (fit, rms) = refit_photon_to_s(m, c.phase_anchor, c.phase_anchor_photons, start)?;
                measured_rms = Some(rms);
                let k = fit.params[0];
                let phi_max = c.phase_anchor * (1.0 + k * c.phase_anchor_photons);
                match c.phase_ellipticity {
                    Calibrated::Value(e) => (k, optics.peak_phase(grid, e, n0)?, e),
                    Calibrated::Auto => (k, phi_max, calibrate_ellipticity_inner(&optics, grid, n0, phi_max)?),
                }
            }
            (Calibrated::Auto, None) => {
                let (k, phi_max) = match c.phase_photon_to_s {
                    Calibrated::Value(k) => (k, c.phase_anchor * (1.0 + k * c.phase_anchor_photons)),
                    Calibrated::Auto => anchors()?,
                };
                (k, phi_max, calibrate_ellipticity_inner(&optics, grid, n0, phi_max)?)
            }
            (Calibrated::Value(e), None) => {
                let phi_max = optics.peak_phase(grid, e, n0)?;
                let k = match c.phase_photon_to_s {
                    Calibrated::Value(k) => k,
                    Calibrated::Auto => photon_to_s_for_anchor(phi_max, c.phase_anchor, c.phase_anchor_photons)?,
                };
                (k, phi_max, e)
            }
        };
        let two_level = TwoLevelParams::new(c.emitter_t1, c.emitter_t2, photon_to_s)?;

        let pumping = PumpingModel {
            gamma1: c.spin_gamma1,
            gamma2: c.spin_gamma2,
            law: SpinFlipLaw::new(c.spin_a, Energy(c.spin_ez))?,
            initial: Populations::new(c.spin_initial[0], c.spin_initial[1], c.spin_initial[2])?,
        };
        let beta = match c.control_beta {
            Calibrated::Value(b) => b,
            Calibrated::Auto => {
                let pulse = ControlPulse {
                    beta: 0.0,
                    photons: c.control_calibration_photons,
                    duration: c.control_duration,
                    dt: c.control_dt,
                };
                calibrate_beta(&pumping, &pulse, c.control_ratio, c.control_calibration_temperature)?.beta
            }
        };
        let hash = config.hash();
        Ok(Self {
            optics,
            two_level,
            pumping,
            calibration: Calibration {
                epsilon,
                photon_to_s,
                phi_max,
                beta,
            },
            measured_rms,
            hash,
            config,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn calibration(&self) -> Calibration {
        self.calibration
    }

    /// RMS deviation (degrees) of the refit saturation model from measured points.
    pub fn measured_rms(&self) -> Option<f64> {
        self.measured_rms
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn two_level(&self) -> &TwoLevelParams<f64> {
        &self.two_level
    }

    fn stamp(&self, t: &mut Trace<f64>) {
        let cal = self.calibration;
        t.set_meta("config_hash", &self.hash);
        t.set_meta("epsilon", cal.epsilon);
        t.set_meta("photon_to_s", cal.photon_to_s);
        t.set_meta("phi_max_deg", cal.phi_max);
        t.set_meta("beta", cal.beta);
        t.set_meta("jitter_sigma_ueV", self.config.jitter_sigma);
        t.set_meta("field_T", self.config.field);
    }

    fn control_pulse(&self, photons: f64) -> ControlPulse<f64> {
        ControlPulse {
            beta: self.calibration.beta,
            photons,
            duration: self.config.control_duration,
            dt: self.config.control_dt,
        }
    }

    /// N_Ḡ seen by the Target pulse.
    pub fn target_population(&self, control_on: bool) -> Result<f64> {
        if control_on {
            let pulse = self.control_pulse(self.config.control_photons);
            let out = self.pumping.run(&pulse, self.config.spin_temperature)?;
            Ok(out.final_populations.n_gbar.max(0.0))
        } else {
            Ok(self.pumping.initial.n_gbar)
        }
    }

    /// Emitter weight: N_Ḡ times the normalized coherent fraction at `photons`.
    pub fn emitter_weight(&self, control_on: bool, photons: f64) -> Result<f64> {
        Ok(self.target_population(control_on)? * self.two_level.relative_coherence(photons))
    }

    /// Circular intensities at a single laser detuning.
    pub fn intensities_at(&self, detuning: f64, weight: f64) -> Result<CircularIntensities<f64>> {
        self.optics.intensities(detuning, self.calibration.epsilon, weight)
    }

    /// Gaussian fit of phase vs detuning at emitter weight `weight`.
    pub fn peak_fit(&self, weight: f64) -> Result<FitResult<f64>> {
        self.optics
            .peak_fit(self.config.sweep_detuning.values(), self.calibration.epsilon, weight)
    }

    pub fn run_reflectivity(&self, control_on: bool) -> Result<Trace<f64>> {
        let w = self.emitter_weight(control_on, self.config.target_photons)?;
        let grid = self.config.sweep_detuning.values();
        let spec = self.optics.spectrum(grid, self.calibration.epsilon, w)?;
        let name = if control_on {
            "reflectivity_control_on"
        } else {
            "reflectivity_control_off"
        };
        let mut t = Trace::new(name, &[("detuning", "ueV"), ("I_R", "1"), ("I_L", "1")]);
        for (x, c) in grid.iter().zip(&spec) {
            t.push_row(vec![*x, c.i_r, c.i_l]);
        }
        self.stamp(&mut t);
        t.set_meta("emitter_weight", w);
        t.set_meta("target_photons", self.config.target_photons);
        Ok(t)
    }

    pub fn run_phase_vs_detuning(&self) -> Result<Trace<f64>> {
        let w = self.emitter_weight(false, self.config.target_photons)?;
        let grid = self.config.sweep_detuning.values();
        let phases = self.optics.phase_spectrum(grid, self.calibration.epsilon, w)?;
        let fit = fit_gaussian(&DataSeries::new(grid.to_vec(), phases.clone(), None)?)?;
        let mut t = Trace::new("phase_vs_detuning", &[("detuning", "ueV"), ("phase", "deg")]);
        for (x, p) in grid.iter().zip(&phases) {
            t.push_row(vec![*x, *p]);
        }
        self.stamp(&mut t);
        t.set_meta("target_photons", self.config.target_photons);
        t.set_meta("fit_peak_deg", fit.params[0] + fit.params[3]);
        t.set_meta("fit_center_ueV", fit.params[1]);
        t.set_meta("fit_sigma_ueV", fit.params[2]);
        t.set_meta("fit_offset_deg", fit.params[3]);
        Ok(t)
    }

    /// Phase at `photons` per Target pulse under the configured saturation model.
    pub fn phase_at_target_photons(&self, photons: f64) -> Result<f64> {
        match self.config.phase_saturation {
            SaturationModel::Multiplicative => {
                crate::saturation::phase_vs_photon_number(photons, &self.two_level, self.calibration.phi_max)
            }
            SaturationModel::Jones => {
                let w = self.emitter_weight(false, photons)?;
                self.optics
                    .peak_phase(self.config.sweep_detuning.values(), self.calibration.epsilon, w)
            }
        }
    }

    pub fn run_phase_vs_target_power(&self) -> Result<Trace<f64>> {
        let photons = self.config.sweep_target_photons.values();
        let phases: Vec<f64> = photons
            .par_iter()
            .map(|&n| self.phase_at_target_photons(n))
            .collect::<Result<_>>()?;
        let mut t = Trace::new("phase_vs_target_power", &[("target_photons", "photons"), ("phase", "deg")]);
        for (n, p) in photons.iter().zip(&phases) {
            t.push_row(vec![*n, *p]);
        }
        self.stamp(&mut t);
        t.set_meta(
            "saturation_model",
            self.config.get("phase.saturation").expect("known key"),
        );
        if let Some(rms) = self.measured_rms {
            t.set_meta("measured_rms_deg", rms);
        }
        Ok(t)
    }

    /// Model next to measured (photons, phase) points.
    pub fn compare_target_power(&self, measured: &DataSeries<f64>) -> Result<Trace<f64>> {
        let mut t = Trace::new(
            "phase_vs_target_power_measured",
            &[("target_photons", "photons"), ("measured", "deg"), ("model", "deg")],
        );
        let mut sq = 0.0;
        for (n, y) in measured.x().iter().zip(measured.y()) {
            let m = self.phase_at_target_photons(*n)?;
            sq += (m - y).powi(2);
            t.push_row(vec![*n, *y, m]);
        }
        self.stamp(&mut t);
        t.set_meta("rms_deg", (sq / measured.len() as f64).sqrt());
        Ok(t)
    }

    /// One `(Ξ, phase)` column pair per temperature over the Control-photon sweep.
    pub fn run_switch_vs_control_power(&self) -> Result<Trace<f64>> {
        let temps = self.config.sweep_temperatures.values();
        let photons = self.config.sweep_control_photons.values();
        let mut columns = vec![("control_photons".to_string(), "photons")];
        for t in temps {
            columns.push((format!("xi_T{t}K"), "1"));
            columns.push((format!("phase_T{t}K"), "deg"));
        }
        let cols: Vec<(&str, &str)> = columns.iter().map(|(l, u)| (l.as_str(), *u)).collect();
        let points: Vec<(f64, f64)> = temps.iter().flat_map(|&t| photons.iter().map(move |&n| (t, n))).collect();
        let baseline = self.config.phase_baseline;
        let values: Vec<(f64, f64)> = points
            .par_iter()
            .map(|&(temp, n)| {
                let out = self.pumping.run(&self.control_pulse(n), temp)?;
                let xi = out.contrast.clamp(0.0, 1.0);
                Ok((out.contrast, crate::spindyn::phase_after_control(xi, baseline)?))
            })
            .collect::<Result<_>>()?;
        let mut t = Trace::new("switch", &cols);
        for (i, n) in photons.iter().enumerate() {
            let mut row = vec![*n];
            for j in 0..temps.len() {
                let (xi, phase) = values[j * photons.len() + i];
                row.push(xi);
                row.push(phase);
            }
            t.push_row(row);
        }
        self.stamp(&mut t);
        t.set_meta("baseline_deg", baseline);
        t.set_meta("phase_map", "baseline*(1-Xi)");
        if temps.contains(&0.0) {
            t.set_meta(
                "note_T0",
                "a T = 0 ratio of 90% and a 76 deg phase cannot both hold under a 78 deg baseline; both Xi and phase are reported",
            );
        }
        Ok(t)
    }

    /// Forward-generated bare-cavity reflectivity for both polarizations,
    /// optionally with fixed-seed additive Gaussian noise.
    pub fn forward_reflectivity(&self) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let grid = self.config.sweep_fit_detuning.values().to_vec();
        let refl = |mode: &CavityMode<f64>| -> Vec<f64> {
            grid.iter()
                .map(|&x| reflection_coefficient(Energy(x), mode, None).norm_sqr())
                .collect()
        };
        let mut h = refl(&self.optics.h_mode);
        let mut v = refl(&self.optics.v_mode);
        if self.config.fit_noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.fit_seed);
            let normal = Normal::new(0.0, self.config.fit_noise)
                .map_err(|e| Error::invalid("fit.noise", e.to_string()))?;
            for y in h.iter_mut().chain(v.iter_mut()) {
                *y += normal.sample(&mut rng);
            }
        }
        Ok((grid, h, v))
    }

    /// Fits the forward-generated H and V spectra. Returns the spectra trace
    /// (data and fitted curves) and the parameter trace (one row per mode).
    pub fn run_fit(&self) -> Result<(Trace<f64>, Trace<f64>)> {
        let (grid, h, v) = self.forward_reflectivity()?;
        let bg = self.config.fit_background;
        let dh = DataSeries::new(grid.clone(), h.clone(), None)?;
        let dv = DataSeries::new(grid.clone(), v.clone(), None)?;
        let (fh, fv) = rayon::join(|| fit_lorentzian_dip_with(&dh, bg), || fit_lorentzian_dip_with(&dv, bg));
        let (fh, fv) = (fh?, fv?);
        let pivot = (grid[0] + grid[grid.len() - 1]) / 2.0;
        let model = LorentzianDip { background: bg, pivot };

        let mut spectra = Trace::new(
            "fit_spectra",
            &[
                ("detuning", "ueV"),
                ("R_H", "1"),
                ("R_H_fit", "1"),
                ("R_V", "1"),
                ("R_V_fit", "1"),
            ],
        );
        for (i, &x) in grid.iter().enumerate() {
            spectra.push_row(vec![x, h[i], model.eval(x, &fh.params), v[i], model.eval(x, &fv.params)]);
        }
        let params = fit_parameter_trace(&[(0.0, &fh), (1.0, &fv)]);
        let mut params = params;
        for t in [&mut spectra, &mut params] {
            self.stamp(t);
            t.set_meta("fit_noise", self.config.fit_noise);
            t.set_meta("fit_seed", self.config.fit_seed);
            t.set_meta("true_alpha", self.config.cavity_alpha);
            t.set_meta("true_kappa_ueV", self.optics.v_mode.kappa().0);
            t.set_meta("true_split_ueV", self.config.cavity_split);
            t.set_meta("fitted_split_ueV", fh.params[0] - fv.params[0]);
        }
        Ok((spectra, params))
    }

    /// Fits a measured reflectivity spectrum (detuning, reflectivity).
    pub fn fit_measured_spectrum(&self, measured: &DataSeries<f64>) -> Result<(Trace<f64>, Trace<f64>)> {
        let bg = self.config.fit_background;
        let fit = fit_lorentzian_dip_with(measured, bg)?;
        let x = measured.x();
        let model = LorentzianDip {
            background: bg,
            pivot: (x[0] + x[x.len() - 1]) / 2.0,
        };
        let mut spectra = Trace::new("fit_measured_spectra", &[("detuning", "ueV"), ("R", "1"), ("R_fit", "1")]);
        for (x, y) in x.iter().zip(measured.y()) {
            spectra.push_row(vec![*x, *y, model.eval(*x, &fit.params)]);
        }
        let mut params = fit_parameter_trace(&[(0.0, &fit)]);
        self.stamp(&mut spectra);
        self.stamp(&mut params);
        Ok((spectra, params))
    }

    /// The calibrated constants and the checks they were tuned against, as one row.
    pub fn run_calibration(&self) -> Result<Trace<f64>> {
        let cal = self.calibration;
        let n0 = self.target_population(false)?;
        let zero_power = self.optics.peak_phase(
            self.config.sweep_detuning.values(),
            cal.epsilon,
            n0,
        )?;
        let anchor = self.phase_at_target_photons(self.config.phase_anchor_photons)?;
        let at_target = self.phase_at_target_photons(self.config.target_photons)?;
        let pulse = self.control_pulse(self.config.control_calibration_photons);
        let ratio = 1.0 - self
            .pumping
            .run(&pulse, self.config.control_calibration_temperature)?
            .contrast;
        let mut t = Trace::new(
            "calibration",
            &[
                ("epsilon", "1"),
                ("photon_to_s", "1/photon"),
                ("phi_max", "deg"),
                ("beta", "1/sqrt(ns*photon)"),
                ("zero_power_peak", "deg"),
                ("phase_at_anchor", "deg"),
                ("phase_at_target", "deg"),
                ("switching_ratio", "1"),
            ],
        );
        t.push_row(vec![
            cal.epsilon,
            cal.photon_to_s,
            cal.phi_max,
            cal.beta,
            zero_power,
            anchor,
            at_target,
            ratio,
        ]);
        self.stamp(&mut t);
        match self.jitter_sigma_for_fwhm(self.config.jitter_fwhm) {
            Ok(s) => t.set_meta("jitter_sigma_for_fwhm_ueV", s),
            Err(e) => t.set_meta("jitter_sigma_for_fwhm_ueV", format!("unavailable: {e}")),
        }
        t.set_meta("lcp_fwhm_ueV", self.lcp_fwhm(self.config.jitter_sigma)?);
        Ok(t)
    }

    /// FWHM of the emitter-induced LCP peak (excess over the bare cavity) at
    /// the Control-OFF Target weight, for jitter `sigma`.
    pub fn lcp_fwhm(&self, sigma: f64) -> Result<f64> {
        let mut optics = self.optics.clone();
        optics.jitter = jitter_kernel(sigma);
        let w = self.emitter_weight(false, self.config.target_photons)?;
        let grid = self.config.sweep_detuning.values();
        let eps = self.calibration.epsilon;
        let with = optics.spectrum(grid, eps, w)?;
        let without = optics.spectrum(grid, eps, 0.0)?;
        let excess: Vec<f64> = with.iter().zip(&without).map(|(a, b)| a.i_l - b.i_l).collect();
        half_max_width(grid, &excess).ok_or_else(|| Error::Calibration {
            quantity: "lcp_fwhm",
            reason: "LCP peak does not fall to half maximum inside the detuning sweep".into(),
        })
    }

    /// Jitter sigma at which the LCP peak FWHM equals `target_fwhm`.
    pub fn jitter_sigma_for_fwhm(&self, target_fwhm: f64) -> Result<f64> {
        let natural = self.lcp_fwhm(0.0)?;
        if natural >= target_fwhm {
            return Err(Error::Calibration {
                quantity: "jitter_sigma",
                reason: format!("unjittered FWHM {natural} ueV already reaches {target_fwhm} ueV"),
            });
        }
        let hi = target_fwhm / 2.354_820_045;
        bisect(|s| Ok(self.lcp_fwhm(s)? - target_fwhm), 0.0, hi, 1e-6, 100)
    }
}

fn fit_parameter_trace(fits: &[(f64, &FitResult<f64>)]) -> Trace<f64> {
    let mut t = Trace::new(
        "fit_parameters",
        &[
            ("mode", "0=H;1=V"),
            ("center", "ueV"),
            ("kappa", "ueV"),
            ("alpha", "1"),
            ("background", "1"),
            ("residual_norm", "1"),
            ("iterations", "1"),
        ],
    );
    for (mode, f) in fits {
        t.push_row(vec![
            *mode,
            f.params[0],
            f.params[1],
            f.params[2],
            f.params[3],
            f.residual_norm,
            f.iterations as f64,
        ]);
    }
    t
}

/// Full width at half maximum of the largest positive peak, with linear
/// interpolation at both crossings.
fn half_max_width(x: &[f64], y: &[f64]) -> Option<f64> {
    let (peak, &max) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(max > 0.0) {
        return None;
    }
    let half = max / 2.0;
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let lo = (0..peak).rev().find(|&i| y[i] < half).map(|i| cross(i, i + 1))?;
    let hi = (peak + 1..y.len()).find(|&i| y[i] < half).map(|i| cross(i - 1, i))?;
    Some(hi - lo)
}

fn calibrate_ellipticity_inner(optics: &Optics, grid: &[f64], weight: f64, target: f64) -> Result<f64> {
    let f = |e: f64| optics.peak_phase(grid, e, weight).map(|p| p - target);
    let at_zero = f(0.0)?;
    if at_zero >= 0.0 {
        return Err(Error::Calibration {
            quantity: "ellipticity",
            reason: format!(
                "peak phase {} deg with ideal RCP input already exceeds the target {target} deg",
                at_zero + target
            ),
        });
    }
    let mut lo = 0.0;
    let mut e = ELLIPTICITY_SCAN_STEP;
    while e <= ELLIPTICITY_MAX + 1e-12 {
        if f(e)? >= 0.0 {
            return bisect(f, lo, e, 1e-12, 200);
        }
        lo = e;
        e += ELLIPTICITY_SCAN_STEP;
    }
    Err(Error::Calibration {
        quantity: "ellipticity",
        reason: format!("no ellipticity up to {ELLIPTICITY_MAX} reaches a {target} deg peak"),
    })
}

/// Ellipticity whose zero-power Gaussian-fitted peak phase equals `target`.
pub fn calibrate_ellipticity(config: &ExperimentConfig, target: f64) -> Result<f64> {
    config.validate()?;
    let optics = Optics::new(config, config.jitter_sigma)?;
    calibrate_ellipticity_inner(&optics, config.sweep_detuning.values(), config.spin_initial[0], target)
}
