//! `nonlocal-korn`: parameter sweeps and verification reports.
//!
//! Exit status is 0 when every check passed, 2 when a check failed and 1 on
//! usage or configuration errors.

mod config;
mod jobs;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand as ClapSubcommand};

use config::{resolve, RunArgs, Subcommand};

#[derive(Parser)]
#[command(name = "nonlocal-korn", version, about = "Verification harness for projected-difference fractional seminorms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Table of σ, η₁, η₂, γ₁, γ₂, γ, c_p and, for p = 2, l₁, l₂, κ.
    Constants(RunArgs),
    /// Hardy inequality, its split form and (p ≥ 2) the remainder form.
    Hardy(RunArgs),
    /// Korn band, Parseval and half-space Korn checks (p = 2).
    Korn(RunArgs),
    /// Reflection extension: boundedness, decomposition, mixed integral.
    Extend(RunArgs),
    /// Dilation bound for F_λ.
    Scaling(RunArgs),
    /// ε-excised ground-state integrals against their limit.
    Groundstate(RunArgs),
    /// Scalar and Φ inequality scans.
    Pointwise(RunArgs),
    /// hardy, korn, extend, scaling and groundstate over a sweep.
    Sweep(RunArgs),
    /// Every check plus the constant table.
    All(RunArgs),
    /// Plot-ready CSV tables from JSON report files.
    Plot {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(sub: Subcommand, args: &RunArgs) -> Result<bool, String> {
    let r = resolve(sub, args)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let outputs = jobs::run_all(&r.config, r.jobs)?;
    print!("{}", output::summary_table(&outputs));
    for p in output::write_outputs(&r.config, &outputs)? {
        println!("wrote {}", p.display());
    }
    let (_, reports) = output::split(&outputs);
    Ok(reports.iter().all(|r| r.passed))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let (sub, args) = match cli.command {
        Command::Plot { inputs, out } => {
            return match plot::read_reports(&inputs).and_then(|rs| plot::emit_plot_data(&rs, &out)) {
                Ok(paths) => {
                    for p in paths {
                        println!("wrote {}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            };
        }
        Command::Constants(a) => (Subcommand::Constants, a),
        Command::Hardy(a) => (Subcommand::Hardy, a),
        Command::Korn(a) => (Subcommand::Korn, a),
        Command::Extend(a) => (Subcommand::Extend, a),
        Command::Scaling(a) => (Subcommand::Scaling, a),
        Command::Groundstate(a) => (Subcommand::Groundstate, a),
        Command::Pointwise(a) => (Subcommand::Pointwise, a),
        Command::Sweep(a) => (Subcommand::Sweep, a),
        Command::All(a) => (Subcommand::All, a),
    };
    match run(sub, &args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
