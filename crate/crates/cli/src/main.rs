mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::*;

/// Emitter-cavity analysis: simulate, fit, compute and budget.
#[derive(Debug, Parser)]
#[command(name = "purcellkit", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for synthetic noise.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Integrator relative tolerance, or the step tolerance of a fit.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output file (a directory for gen-synthetic). JSON goes to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Master-equation decay traces and rates at one or more detunings.
    SimulateDecay(SimulateDecay),
    /// Single-exponential fit of a decay histogram.
    FitDecay(FitDecay),
    /// Fit C, κ and τ₁ to lifetime-versus-detuning points.
    FitDetuning(FitDetuning),
    /// Cavity Lorentzian plus ZPL Gaussian fit of a spectrum.
    FitSpectrum(FitSpectrum),
    /// ZPL cooperativity and Purcell factor.
    Purcell(Purcell),
    /// Vacuum coupling rate from lifetime, frequency and mode volume.
    G0(G0),
    /// Ensemble weighting factor of a field grid.
    EnsembleWeight(EnsembleWeight),
    /// Mode volume of a field grid.
    ModeVolume(ModeVolume),
    /// Cascaded efficiency of a link chain.
    LinkBudget(LinkBudget),
    /// Writes the synthetic fixture datasets into a directory.
    GenSynthetic(GenSynthetic),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let c = &cli.common;
    let res = match &cli.command {
        Command::SimulateDecay(a) => simulate_decay(a, c),
        Command::FitDecay(a) => fit_decay(a, c),
        Command::FitDetuning(a) => fit_detuning(a, c),
        Command::FitSpectrum(a) => fit_spectrum(a, c),
        Command::Purcell(a) => purcell(a, c),
        Command::G0(a) => g0(a, c),
        Command::EnsembleWeight(a) => ensemble_weight(a, c),
        Command::ModeVolume(a) => mode_volume(a, c),
        Command::LinkBudget(a) => link_budget(a, c),
        Command::GenSynthetic(a) => gen_synthetic(a, c),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
