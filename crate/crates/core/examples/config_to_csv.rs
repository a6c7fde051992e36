//! Parse a scenario file, echo the resolved configuration and stream the
//! per-step metrics as CSV to stdout.
//!
//! cargo run --release --example config_to_csv -- configs/reference_n16.toml [mode] > metrics.csv

use std::io::{self, BufWriter};

use swarm_impedance::harness::{load_scenario, metrics_rows, render_scenario, run_scenario, write_csv, Mode};
use swarm_impedance::simulation::SimOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().ok_or("usage: config_to_csv <scenario.toml> [mode]")?;
    let mode: Mode = args.get(1).map_or("nominal", String::as_str).parse()?;

    let scenario = load_scenario(path.as_ref())?;
    eprintln!("{}", render_scenario(&scenario));
    let traj = run_scenario(&scenario, mode, SimOptions::default())?;
    write_csv(&mut BufWriter::new(io::stdout().lock()), &metrics_rows(&traj), false)?;
    Ok(())
}
