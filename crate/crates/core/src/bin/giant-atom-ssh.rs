use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use giant_atom_ssh::commands::{
    cmd_distribution, cmd_effective, cmd_probe, cmd_spectrum, cmd_validate, CommandError,
};
use giant_atom_ssh::config::{Overrides, RunConfig};
use giant_atom_ssh::output::{write_tables, OutputTable};

#[derive(Parser)]
#[command(version, about = "Giant atom in an SSH waveguide: spectra, profiles and effective couplings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML recipe; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Energy levels over the theta sweep.
    Spectrum(Common),
    /// Photon distribution of one level, numeric and analytic.
    Distribution(Common),
    /// Atom-band couplings and effective photon-photon couplings.
    Effective(Common),
    /// Probe-atom Rabi dynamics.
    Probe(Common),
    /// Analytic-versus-numeric cross checks.
    Validate(Common),
}

fn load(common: &Common) -> Result<RunConfig, CommandError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    common.overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &RunConfig, tables: &[OutputTable]) -> Result<(), CommandError> {
    for path in write_tables(&cfg.output_dir, tables, cfg.format)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CommandError> {
    match cli.command {
        Command::Spectrum(c) => {
            let cfg = load(&c)?;
            emit(&cfg, &cmd_spectrum(&cfg)?)?;
        }
        Command::Distribution(c) => {
            let cfg = load(&c)?;
            emit(&cfg, &[cmd_distribution(&cfg)?])?;
        }
        Command::Effective(c) => {
            let cfg = load(&c)?;
            emit(&cfg, &cmd_effective(&cfg)?)?;
        }
        Command::Probe(c) => {
            let cfg = load(&c)?;
            emit(&cfg, &[cmd_probe(&cfg)?])?;
        }
        Command::Validate(c) => {
            let cfg = load(&c)?;
            let report = cmd_validate(&cfg)?;
            for check in &report.checks {
                println!(
                    "{} {} residual={:.3e} tolerance={:.1e}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.residual,
                    check.tolerance
                );
            }
            emit(&cfg, &[report.table()?])?;
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
