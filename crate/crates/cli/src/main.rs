use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use cptshift_cli::{output_dir, parse_config, run_scenario};
use cptshift_core::sweep::symmetrizing_roots;
use cptshift_core::units::{mhz, to_mhz};

#[derive(Parser)]
#[command(name = "cptshift", version, about = "CPT modulation-spectroscopy sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write CSVs plus manifest.json.
    Run { config: PathBuf },
    /// Parse and check a scenario file without computing anything.
    Validate { config: PathBuf },
    /// One-photon detuning at which the L/R asymmetry coupling vanishes.
    SymDetuning {
        /// Optical linewidth Γ/2π, MHz.
        #[arg(long)]
        gamma: f64,
        /// Excited-state splitting ω_e/2π, MHz.
        #[arg(long = "omega-e")]
        omega_e: f64,
        #[arg(long = "dipole-ratio-sq", default_value_t = 1.0 / 3.0)]
        dipole_ratio_sq: f64,
    },
}

fn load(path: &PathBuf) -> anyhow::Result<Result<cptshift_cli::ScenarioConfig, cptshift_cli::ConfigError>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_config(&text))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Validate { config } => match load(&config)? {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                eprint!("{e}");
                Ok(ExitCode::from(2))
            }
        },
        Command::Run { config } => {
            let cfg = match load(&config)? {
                Ok(c) => c,
                Err(e) => {
                    eprint!("{e}");
                    return Ok(ExitCode::from(2));
                }
            };
            let dir = output_dir(&cfg);
            let m = run_scenario(&cfg, &dir)?;
            for s in &m.sweeps {
                println!("{}: {} IP, {} PZD", s.file, s.ips, s.pzds);
            }
            println!("wrote {} files and manifest.json to {}", m.outputs.len(), dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::SymDetuning {
            gamma,
            omega_e,
            dipole_ratio_sq,
        } => {
            let roots = symmetrizing_roots(mhz(gamma), mhz(omega_e), dipole_ratio_sq)?;
            let chosen = cptshift_core::symmetrizing_detuning(mhz(gamma), mhz(omega_e), dipole_ratio_sq)?;
            for r in &roots {
                let mark = if *r == chosen { "  (selected)" } else { "" };
                println!("{:.4} MHz{mark}", to_mhz(*r));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
