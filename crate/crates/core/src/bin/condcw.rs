use std::process::ExitCode;

use clap::{Parser, Subcommand};
use condcw::cli::{run, Mode, Settings, SweepSpec};

#[derive(Parser)]
#[command(
    name = "condcw",
    version,
    about = "Conditional Curie-Weiss model solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Magnetization along a field sweep at fixed beta
    SweepH(Settings),
    /// Directional limits along a temperature sweep
    SweepBeta(Settings),
    /// Region and regime over an (s, r) grid
    Diagram(Settings),
    /// Global minimizers of the free energy at one point
    Solve(Settings),
    /// Magnetization limits at the singular field
    Limits(Settings),
    /// Exact finite-N averages
    Exact(Settings),
    /// Monte Carlo estimate at finite N
    Mc(Settings),
    /// Solver, exact finite-N and Monte Carlo side by side (JSON)
    Compare(Settings),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, settings) = match cli.command {
        Command::SweepH(s) => (Mode::SweepH, s),
        Command::SweepBeta(s) => (Mode::SweepBeta, s),
        Command::Diagram(s) => (Mode::Diagram, s),
        Command::Solve(s) => (Mode::Solve, s),
        Command::Limits(s) => (Mode::Limits, s),
        Command::Exact(s) => (Mode::Exact, s),
        Command::Mc(s) => (Mode::Mc, s),
        Command::Compare(s) => (Mode::Compare, s),
    };
    let result =
        Settings::resolve(settings).and_then(|settings| run(&SweepSpec { mode, settings }));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("condcw: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
