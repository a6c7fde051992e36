use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use swarm_impedance::harness::experiment::{run_experiment, Overrides};
use swarm_impedance::harness::Mode;

/// Simulate a robot swarm pushing against an obstacle and certify passivity.
#[derive(Debug, Parser)]
#[command(name = "swarm-sim", version)]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["nominal", "tunable", "tunable-from-nominal"]))]
    mode: String,
    /// Override the initial-condition seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for metrics.csv, summary.txt and config.toml.
    #[arg(long)]
    out: PathBuf,
    /// Append every robot's position and velocity to metrics.csv.
    #[arg(long)]
    full_state: bool,
    /// Override the number of integration steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the time step; the controller period keeps its step count.
    #[arg(long)]
    dt: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mode: Mode = cli.mode.parse().expect("validated by clap");
    let overrides = Overrides {
        seed: cli.seed,
        steps: cli.steps,
        dt: cli.dt,
        full_state: cli.full_state,
    };
    match run_experiment(&cli.config, mode, &cli.out, &overrides) {
        Ok(artifacts) => {
            print!("{}", artifacts.run.render());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("swarm-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
