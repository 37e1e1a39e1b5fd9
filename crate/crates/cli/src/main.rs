use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qdpc_cli::run::{self, Experiment, Invocation, ModelChoice};

/// Rate-equation simulator for the dipole-coupled double-dot photocell.
#[derive(Parser)]
#[command(name = "qdpc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived energies and rates for the configured device
    Rates(CommonArgs),
    /// Integrate the populations from the all-ground start
    Dynamics(CommonArgs),
    /// Stationary operating point at the configured load rate
    Steady(CommonArgs),
    /// Current, voltage, and power over the load-rate grid
    Iv(CommonArgs),
    /// Enhancement versus the interdot transfer-rate multiplier
    SweepGammaX(CommonArgs),
    /// Enhancement over stacking distance and barrier thickness
    SweepGeometry(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Key-value config file; omitted keys take the reference defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output prefix; writes <prefix>.config.txt, experiment CSVs, <prefix>.summary.json
    #[arg(long)]
    out: Option<String>,
    /// Model variant(s) to run; sweeps always compare both
    #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
    model: ModelChoice,
    /// Override one config key, e.g. --set Gamma_load_per_ns=0.1 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Rates(a) => (Experiment::Rates, a),
        Command::Dynamics(a) => (Experiment::Dynamics, a),
        Command::Steady(a) => (Experiment::Steady, a),
        Command::Iv(a) => (Experiment::Iv, a),
        Command::SweepGammaX(a) => (Experiment::SweepGammaX, a),
        Command::SweepGeometry(a) => (Experiment::SweepGeometry, a),
    };
    let outcome = run::execute(&Invocation {
        experiment,
        config_path: args.config,
        out: args.out,
        model: args.model,
        sets: args.set,
    });
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    std::process::exit(outcome.exit_code);
}
