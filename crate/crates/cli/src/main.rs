//! `stno`: run gate, multiplexing, circuit, film and sweep experiments and
//! write their data as CSV.

mod circuit;
mod config;
mod fail;
mod film;
mod gate;
mod mux;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "stno", version, about = "Phase-encoded logic on spin torque nano oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drive one oscillator with a gate and decode its output digit.
    #[command(after_help = gate::CSV_HELP)]
    Gate(gate::GateArgs),
    /// Run several gates on one oscillator, one carrier frequency each.
    #[command(after_help = mux::CSV_HELP)]
    Mux(mux::MuxArgs),
    /// Compile a boolean expression to oscillator gates and evaluate it.
    #[command(after_help = circuit::CSV_HELP)]
    Circuit(circuit::CircuitArgs),
    /// Simulate contacts on a continuous film and read the detector sites.
    #[command(after_help = film::CSV_HELP)]
    Film(film::FilmArgs),
    /// Run a gate or film experiment over a grid of parameter values.
    #[command(after_help = sweep::CSV_HELP)]
    Sweep(sweep::SweepArgs),
}

/// Flags shared by every command.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON experiment config; flags override its values.
    #[arg(long, global = false)]
    pub config: Option<PathBuf>,
    /// Output directory [default: stno-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drive gain.
    #[arg(long)]
    pub gain: Option<f64>,
    /// Carrier frequency (cycles per time unit).
    #[arg(long)]
    pub frequency: Option<f64>,
    /// Run length in carrier periods.
    #[arg(long)]
    pub periods: Option<u32>,
    /// Integration time step.
    #[arg(long)]
    pub dt: Option<f64>,
}

impl Common {
    /// Loads the config and applies the shared flags on top of it.
    pub fn resolve(&self) -> anyhow::Result<config::ExperimentConfig> {
        let mut cfg = config::ExperimentConfig::load(self.config.as_deref())?;
        config::set(&mut cfg.out, self.out.clone());
        config::set(&mut cfg.gain, self.gain);
        config::set(&mut cfg.periods, self.periods);
        config::set(&mut cfg.dt, self.dt);
        if let Some(f) = self.frequency {
            let mut carrier = cfg.carrier.unwrap_or_default();
            carrier.frequency = f;
            cfg.carrier = Some(carrier);
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gate(a) => gate::run(a),
        Command::Mux(a) => mux::run(a),
        Command::Circuit(a) => circuit::run(a),
        Command::Film(a) => film::run(a),
        Command::Sweep(a) => sweep::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(fail::exit_code(&e))
        }
    }
}
