//! Command-line plumbing for `qdswitch`: config files, scenario dispatch,
//! CSV and manifest output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use qdswitch_core::fitting::DataSeries;
use qdswitch_core::scenarios::{Experiment, ExperimentConfig, KEYS};
use qdswitch_core::trace::Trace;
use qdswitch_core::Error as CoreError;

/// Directory searched for `qdswitch.conf` when `--config` is not given.
pub const CONFIG_DIR_ENV: &str = "QDSWITCH_CONFIG_DIR";
pub const DEFAULT_CONFIG_NAME: &str = "qdswitch.conf";

pub const SCENARIOS: &[&str] = &["reflectivity", "phase-vs-detuning", "phase-vs-power", "switch", "fit", "calibrate"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{}{source}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        #[source]
        source: CoreError,
    },

    #[error(transparent)]
    Numerical(CoreError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Numerical(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config { line: None, source: e }
        }
    }
}

/// Full key for `key`, which may also be the unambiguous last segment of one
/// (`alpha` for `cavity.alpha`).
pub fn resolve_key(key: &str) -> Result<&'static str, CoreError> {
    if let Some(k) = KEYS.iter().find(|k| **k == key) {
        return Ok(k);
    }
    let hits: Vec<&'static str> = KEYS
        .iter()
        .copied()
        .filter(|k| k.rsplit('.').next() == Some(key))
        .collect();
    match hits.as_slice() {
        [one] => Ok(one),
        [] => Err(CoreError::InvalidInput {
            name: "key",
            reason: format!("unknown key `{key}`"),
        }),
        many => Err(CoreError::InvalidInput {
            name: "key",
            reason: format!("`{key}` is ambiguous: {}", many.join(", ")),
        }),
    }
}

/// A parsed config and the line each key was set on.
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub config: ExperimentConfig,
    pub lines: BTreeMap<&'static str, usize>,
}

impl ParsedConfig {
    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, item: &str) -> Result<(), CliError> {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{item}`")))?;
        let key = resolve_key(key.trim()).map_err(|source| CliError::Config { line: None, source })?;
        self.config
            .set(key, value)
            .map_err(|source| CliError::Config { line: None, source })?;
        self.lines.remove(key);
        Ok(())
    }

    /// Validates the config, attaching the line of the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        self.config.validate().map_err(|source| self.locate(source))
    }

    fn locate(&self, source: CoreError) -> CliError {
        let line = match &source {
            CoreError::InvalidInput { name, .. } => self.lines.get(name).copied(),
            _ => None,
        };
        CliError::Config { line, source }
    }
}

/// Parses flat `key = value` text. `#` starts a comment; blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<ParsedConfig, CliError> {
    let mut parsed = ParsedConfig {
        config: ExperimentConfig::default(),
        lines: BTreeMap::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |source| CliError::Config {
            line: Some(line),
            source,
        };
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(CoreError::InvalidInput {
                name: "key",
                reason: format!("expected `key = value`, got `{content}`"),
            }));
        };
        let key = resolve_key(key.trim()).map_err(err)?;
        if let Some(first) = parsed.lines.insert(key, line) {
            return Err(err(CoreError::InvalidInput {
                name: key,
                reason: format!("already set on line {first}"),
            }));
        }
        parsed.config.set(key, value).map_err(err)?;
    }
    Ok(parsed)
}

/// Reads and parses a config file, returning it with its raw bytes.
pub fn parse_config(path: &Path) -> Result<(ParsedConfig, Vec<u8>), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| {
        CliError::io(path, io::Error::new(io::ErrorKind::InvalidData, "config is not UTF-8"))
    })?;
    let parsed = parse_config_text(&text)?;
    parsed.validate()?;
    Ok((parsed, bytes))
}

/// `--config` if given, else `$QDSWITCH_CONFIG_DIR/qdswitch.conf` when present.
pub fn default_config_path(explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    let dir = std::env::var_os(CONFIG_DIR_ENV)?;
    let p = Path::new(&dir).join(DEFAULT_CONFIG_NAME);
    p.is_file().then_some(p)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_measured(path: &Path) -> Result<DataSeries<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    DataSeries::parse_csv(&text).map_err(|source| CliError::Config { line: None, source })
}

/// Runs one scenario and returns its traces in output order.
pub fn run_scenario(
    scenario: &str,
    config: ExperimentConfig,
    measured: Option<&DataSeries<f64>>,
) -> Result<(Experiment, Vec<Trace<f64>>), CliError> {
    if !SCENARIOS.contains(&scenario) {
        return Err(CliError::Usage(format!(
            "unknown scenario `{scenario}`; expected one of {}",
            SCENARIOS.join(", ")
        )));
    }
    let experiment = match (scenario, measured) {
        ("phase-vs-power", Some(m)) => Experiment::with_measured_saturation(config, m)?,
        _ => Experiment::new(config)?,
    };
    let traces = match scenario {
        "reflectivity" => vec![experiment.run_reflectivity(false)?, experiment.run_reflectivity(true)?],
        "phase-vs-detuning" => vec![experiment.run_phase_vs_detuning()?],
        "phase-vs-power" => {
            let mut t = vec![experiment.run_phase_vs_target_power()?];
            if let Some(m) = measured {
                t.push(experiment.compare_target_power(m)?);
            }
            t
        }
        "switch" => vec![experiment.run_switch_vs_control_power()?],
        "fit" => {
            let (spectra, params) = match measured {
                Some(m) => experiment.fit_measured_spectrum(m)?,
                None => experiment.run_fit()?,
            };
            vec![spectra, params]
        }
        "calibrate" => vec![experiment.run_calibration()?],
        _ => unreachable!(),
    };
    Ok((experiment, traces))
}

/// Reproducibility record written next to the CSVs.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub scenario: String,
    pub config_path: Option<PathBuf>,
    pub config_file_sha256: Option<String>,
    pub overrides: Vec<String>,
    pub measured_path: Option<PathBuf>,
    pub measured_sha256: Option<String>,
    pub canonical_config: String,
    pub config_hash: String,
    pub epsilon: f64,
    pub photon_to_s: f64,
    pub phi_max: f64,
    pub beta: f64,
    pub outputs: Vec<(String, BTreeMap<String, String>)>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let none = || "none".to_string();
        writeln!(out, "tool = qdswitch {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(out, "scenario = {}", self.scenario).unwrap();
        writeln!(
            out,
            "config.path = {}",
            self.config_path.as_ref().map_or_else(none, |p| p.display().to_string())
        )
        .unwrap();
        writeln!(out, "config.file_sha256 = {}", self.config_file_sha256.clone().unwrap_or_else(none)).unwrap();
        for o in &self.overrides {
            writeln!(out, "config.override = {o}").unwrap();
        }
        writeln!(out, "config.hash = {}", self.config_hash).unwrap();
        if let Some(p) = &self.measured_path {
            writeln!(out, "measured.path = {}", p.display()).unwrap();
            writeln!(out, "measured.sha256 = {}", self.measured_sha256.clone().unwrap_or_else(none)).unwrap();
        }
        writeln!(out, "calibration.epsilon = {}", self.epsilon).unwrap();
        writeln!(out, "calibration.photon_to_s = {}", self.photon_to_s).unwrap();
        writeln!(out, "calibration.phi_max = {}", self.phi_max).unwrap();
        writeln!(out, "calibration.beta = {}", self.beta).unwrap();
        for (file, meta) in &self.outputs {
            writeln!(out, "output = {file}").unwrap();
            for (k, v) in meta {
                writeln!(out, "output.{file}.{k} = {v}").unwrap();
            }
        }
        out.push_str("\n[config]\n");
        out.push_str(&self.canonical_config);
        out
    }
}

fn gnuplot_script(trace: &Trace<f64>, csv: &str) -> String {
    let cols = trace.columns();
    let mut s = String::new();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set key autotitle columnhead").unwrap();
    writeln!(s, "set xlabel '{}'", cols[0].header()).unwrap();
    let plots: Vec<String> = (2..=cols.len())
        .map(|c| format!("'{csv}' using 1:{c} with lines"))
        .collect();
    writeln!(s, "plot {}", plots.join(", \\\n     ")).unwrap();
    s
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

/// Writes one CSV per trace (plus optional gnuplot scripts) and returns the
/// file names with each trace's metadata.
pub fn write_traces(
    out_dir: &Path,
    traces: &[Trace<f64>],
    gnuplot: bool,
) -> Result<Vec<(String, BTreeMap<String, String>)>, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut outputs = Vec::new();
    for t in traces {
        let csv = format!("{}.csv", t.name());
        write_file(&out_dir.join(&csv), &t.to_csv())?;
        if gnuplot {
            let gp = format!("{}.gp", t.name());
            write_file(&out_dir.join(&gp), &gnuplot_script(t, &csv))?;
        }
        outputs.push((csv, t.metadata().clone()));
    }
    Ok(outputs)
}

/// Everything `qdswitch` needs for one invocation.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub scenario: String,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub overrides: Vec<String>,
    pub measured: Option<PathBuf>,
    pub gnuplot: bool,
}

/// Parses, runs and writes. Returns the manifest that was written.
pub fn execute(inv: &Invocation) -> Result<RunManifest, CliError> {
    if !SCENARIOS.contains(&inv.scenario.as_str()) {
        return Err(CliError::Usage(format!(
            "unknown scenario `{}`; expected one of {}",
            inv.scenario,
            SCENARIOS.join(", ")
        )));
    }
    let config_path = default_config_path(inv.config.as_deref());
    let (mut parsed, file_hash) = match &config_path {
        Some(p) => {
            let (parsed, bytes) = parse_config(p)?;
            (parsed, Some(sha256_hex(&bytes)))
        }
        None => (parse_config_text("")?, None),
    };
    for o in &inv.overrides {
        parsed.apply_override(o)?;
    }
    parsed.validate()?;

    let (measured, measured_hash) = match &inv.measured {
        Some(p) => {
            let bytes = fs::read(p).map_err(|e| CliError::io(p, e))?;
            (Some(read_measured(p)?), Some(sha256_hex(&bytes)))
        }
        None => (None, None),
    };

    let canonical = parsed.config.canonical();
    let (experiment, traces) = run_scenario(&inv.scenario, parsed.config, measured.as_ref())?;
    let outputs = write_traces(&inv.out, &traces, inv.gnuplot)?;
    let cal = experiment.calibration();
    let manifest = RunManifest {
        scenario: inv.scenario.clone(),
        config_path,
        config_file_sha256: file_hash,
        overrides: inv.overrides.clone(),
        measured_path: inv.measured.clone(),
        measured_sha256: measured_hash,
        canonical_config: canonical,
        config_hash: experiment.config_hash().to_string(),
        epsilon: cal.epsilon,
        photon_to_s: cal.photon_to_s,
        phi_max: cal.phi_max,
        beta: cal.beta,
        outputs,
    };
    write_file(&inv.out.join("manifest.txt"), &manifest.render())?;
    Ok(manifest)
}
