use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qdswitch_cli::{execute, CliError, Invocation, CONFIG_DIR_ENV};

/// Quantum-dot spin-photon switch simulator.
#[derive(Debug, Parser)]
#[command(name = "qdswitch", version, after_help = format!(
    "Scenarios: {}\nWithout --config, ${CONFIG_DIR_ENV}/qdswitch.conf is used when present, else the defaults.",
    qdswitch_cli::SCENARIOS.join(", ")
))]
struct Args {
    /// Scenario to run.
    scenario: String,

    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,

    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Measured data: (photons, phase) for phase-vs-power, (detuning, reflectivity) for fit.
    #[arg(long)]
    measured: Option<PathBuf>,

    /// Also write a gnuplot script per CSV.
    #[arg(long)]
    gnuplot: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let inv = Invocation {
        scenario: args.scenario,
        config: args.config,
        out: args.out,
        overrides: args.overrides,
        measured: args.measured,
        gnuplot: args.gnuplot,
    };
    match execute(&inv) {
        Ok(m) => {
            for (file, _) in &m.outputs {
                println!("{}", inv.out.join(file).display());
            }
            println!("{}", inv.out.join("manifest.txt").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qdswitch: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("run `qdswitch --help` for usage");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
