use std::path::PathBuf;
use std::process::ExitCode;

use abp_core::fixtures::Fixture;
use abp_core::{run, RunConfig, Subcommand};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Cones,
    Abp,
    Quotient,
    Submanifold,
    Logsob,
    Fixtures,
    All,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Cones => Subcommand::Cones,
            Command::Abp => Subcommand::Abp,
            Command::Quotient => Subcommand::Quotient,
            Command::Submanifold => Subcommand::Submanifold,
            Command::Logsob => Subcommand::Logsob,
            Command::Fixtures => Subcommand::Fixtures,
            Command::All => Subcommand::All,
        }
    }
}

/// Verification runs for ABP-type isoperimetric and log-Sobolev inequalities.
///
/// Exit status is 0 when every check passes, 1 when a check or a stage
/// fails, 2 on usage errors.
#[derive(Debug, Parser)]
#[command(name = "abp", version)]
struct Cli {
    command: Command,

    /// Point-set files (`cones`) or mesh JSON files (mesh pipelines).
    inputs: Vec<PathBuf>,

    /// Seed of every random stream in the run.
    #[arg(long)]
    seed: u64,

    /// Monte-Carlo samples per estimate.
    #[arg(long, default_value_t = RunConfig::DEFAULT_SAMPLES)]
    samples: usize,

    /// Nominal edge length of the unit-scale fixtures.
    #[arg(long, default_value_t = RunConfig::DEFAULT_H, allow_negative_numbers = true)]
    h: f64,

    /// Contact-set admission tolerance (default: squared mesh size).
    #[arg(long, allow_negative_numbers = true)]
    tol_contact: Option<f64>,

    /// Gradient-matching tolerance (default: 0.6 × mesh size).
    #[arg(long, allow_negative_numbers = true)]
    tol_grad: Option<f64>,

    /// Positivity gate on ∇²u − ⟨Π, y⟩ (default: 10 × mesh size).
    #[arg(long, allow_negative_numbers = true)]
    delta_psd: Option<f64>,

    /// Shell parameters t of the volume bounds.
    #[arg(long, value_delimiter = ',', default_values_t = RunConfig::DEFAULT_T_GATES)]
    t_gates: Vec<f64>,

    /// Fixture to generate with `fixtures`, e.g. `flat_half_disk_embedded(4)`.
    #[arg(long = "fixture", value_parser = parse_fixture)]
    fixtures: Vec<Fixture>,

    /// Directory for report.json, CSV tables, SVG plots and fixture files.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write SVG plots (needs --out).
    #[arg(long)]
    plot: bool,
}

fn parse_fixture(s: &str) -> Result<Fixture, String> {
    s.parse().map_err(|e: abp_core::Error| e.to_string())
}

impl Cli {
    fn config(self) -> RunConfig {
        RunConfig {
            subcommand: self.command.into(),
            inputs: self.inputs,
            fixtures: self.fixtures,
            seed: self.seed,
            samples: self.samples,
            h: self.h,
            tol_contact: self.tol_contact,
            tol_grad: self.tol_grad,
            delta_psd: self.delta_psd,
            t_gates: self.t_gates,
            out: self.out,
            plot: self.plot,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.plot && cli.out.is_none() {
        eprintln!("error: --plot needs --out");
        return ExitCode::from(2);
    }
    let config = cli.config();
    match run(&config) {
        Ok(out) => {
            print!("{}", out.report.summary());
            if let Some(dir) = &config.out {
                println!("report written to {}", dir.join("report.json").display());
            }
            if out.report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
