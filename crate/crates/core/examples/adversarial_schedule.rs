//! Rescale a random robot's edges to random in-bounds gains every period,
//! regardless of contact, and check that the scaled certificate still holds.
//!
//! cargo run --release --example adversarial_schedule -- [N] [runs]

use swarm_impedance::controller::RandomAlphaSchedule;
use swarm_impedance::energy::check_passivity_scaled;
use swarm_impedance::harness::{generate_initial, ObstaclePlacement, Scenario};
use swarm_impedance::simulation::{simulate_with, SimOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let n = args.first().copied().unwrap_or(8) as usize;
    let runs = args.get(1).copied().unwrap_or(10);

    for seed in 0..runs {
        let mut scenario = Scenario::reference(n).with_seed(seed).with_horizon(5.0);
        scenario.obstacle = Some(ObstaclePlacement::OutOfReach { clearance: 1.0 });
        let initial = generate_initial(seed, &scenario)?;
        let mut policy = RandomAlphaSchedule::new(seed, scenario.t_bar, scenario.dt, 1.0);
        match simulate_with(&initial, &scenario, &mut policy, SimOptions::default()) {
            Ok(traj) => {
                let report = check_passivity_scaled(&traj.ledger, traj.alpha_bounds);
                let (lo, hi) = traj
                    .events
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), e| (lo.min(e.alpha), hi.max(e.alpha)));
                println!(
                    "seed {seed:3}: {} rescalings, α in [{lo:.1e}, {hi:.1e}], {:?}, worst margin {:.4}",
                    traj.events.len(),
                    report.status,
                    report.worst_margin
                );
            }
            Err(e) => println!("seed {seed:3}: aborted: {e}"),
        }
    }
    Ok(())
}
