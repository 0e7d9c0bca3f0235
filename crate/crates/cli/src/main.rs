use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use mtoda_cli::config::{Overrides, RunConfig};
use mtoda_cli::{exit_code, output, simulate, validate};

#[derive(Parser)]
#[command(name = "mtoda", version, about = "Multiple orthogonal polynomials and multidimensional Toda lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the continuous or discrete flow and write the trajectory.
    Simulate(Flags),
    /// Check every identity family and write a JSON report.
    Validate(Flags),
    /// Write a trajectory, an A/B field, or a banded Lax matrix.
    Export(Flags),
    /// Write Laguerre closed-form coefficients.
    Oracle(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON config: a moment specification plus run fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// continuous, discrete, validate or oracle.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Box extents, e.g. "4,4".
    #[arg(long)]
    window: Option<String>,
    /// Treat fixed-time relation failures as errors.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

impl Flags {
    fn resolve(&self, mode: Option<&str>, format: Option<&str>) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default_laguerre(),
        };
        cfg.apply(&Overrides {
            mode: mode.map(str::to_string).or_else(|| self.mode.clone()),
            t0: self.t0.clone(),
            t1: self.t1.clone(),
            steps: self.steps,
            lambda: self.lambda.clone(),
            window: self.window.clone(),
            strict: self.strict,
            out: self.out.clone(),
            format: self.format.clone().or_else(|| format.map(str::to_string)),
        })?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Simulate(f) => {
            let cfg = f.resolve(None, None)?;
            output::emit(cfg.out.as_deref(), &simulate::simulate_text(&cfg)?)?;
            Ok(0)
        }
        Command::Oracle(f) => {
            let cfg = f.resolve(Some("oracle"), None)?;
            output::emit(cfg.out.as_deref(), &simulate::simulate_text(&cfg)?)?;
            Ok(0)
        }
        Command::Export(f) => {
            let cfg = f.resolve(None, None)?;
            output::emit(cfg.out.as_deref(), &simulate::export_text(&cfg)?)?;
            Ok(0)
        }
        Command::Validate(f) => {
            let cfg = f.resolve(Some("validate"), Some("json"))?;
            let (text, passed) = validate::report_text(&cfg)?;
            output::emit(cfg.out.as_deref(), &text)?;
            Ok(if passed { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
