//! Energy bookkeeping of one run: storage functions, supplied energy, both
//! passivity margins and the discrete power-balance residual.
//!
//! cargo run --release --example passivity_certificate -- [mode] [N] [seed]

use swarm_impedance::energy::{check_passivity_nominal, check_passivity_scaled, energy_balance_residual};
use swarm_impedance::harness::{generate_initial, Mode, Scenario};
use swarm_impedance::simulation::simulate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode: Mode = args.first().map_or("tunable", String::as_str).parse()?;
    let n = args.get(1).map_or(Ok(16), |s| s.parse())?;
    let seed = args.get(2).map_or(Ok(8), |s| s.parse())?;

    let scenario = Scenario::reference(n).with_seed(seed);
    let initial = generate_initial(seed, &scenario)?;
    let traj = simulate(&initial, &scenario, mode)?;
    let ledger = &traj.ledger;

    println!("H(0) = {:.4}, ΣK(0) = {:.4}", ledger.initial_h, ledger.initial_kinetic_sum);
    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}", "t", "H", "H_s", "∫ supply", "margin P1", "margin P2");
    for s in ledger.history.iter().step_by(scenario.n_steps() / 10) {
        println!(
            "{:6.2} {:12.4} {:12.4} {:12.4} {:12.4} {:12.4}",
            s.time,
            s.h,
            s.h_s,
            s.supplied,
            s.supplied + ledger.initial_h,
            s.supplied + ledger.initial_kinetic_sum
        );
    }

    let p1 = check_passivity_nominal(ledger);
    let p2 = check_passivity_scaled(ledger, traj.alpha_bounds);
    println!("unscaled certificate: {:?}, worst margin {:.4e}", p1.status, p1.worst_margin);
    println!("scaled certificate:   {:?}, worst margin {:.4e}", p2.status, p2.worst_margin);

    let residual = energy_balance_residual(&ledger.history, scenario.dt);
    let worst = residual.iter().map(|r| r.value.abs()).fold(0.0, f64::max);
    println!("power balance residual over {} steps: max {worst:.3e}", residual.len());
    Ok(())
}
