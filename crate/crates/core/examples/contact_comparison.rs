//! Push a swarm into a point obstacle with a constant coupling gain and with
//! the contact controller, and compare the elastic cost and the barycenter.
//!
//! cargo run --release --example contact_comparison -- [N] [seed] [offset] [drive]

use swarm_impedance::harness::{barycenter_deviation, contact_windows, generate_initial, Mode, ObstaclePlacement, Scenario};
use swarm_impedance::simulation::{simulate, Trajectory};

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn contact_costs(traj: &Trajectory) -> Vec<f64> {
    traj.records.iter().filter_map(|r| r.cost).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: f64| args.get(i).map_or(Ok(default), |s| s.parse::<f64>());
    let n = arg(0, 16.0)? as usize;
    let seed = arg(1, 0.0)? as u64;

    let mut scenario = Scenario::reference(n).with_seed(seed);
    if let Some(offset) = args.get(2) {
        scenario.obstacle = Some(ObstaclePlacement::AheadOfBarycenter { offset: offset.parse()? });
    }
    scenario.drive_force.x = arg(3, scenario.drive_force.x)?;

    let initial = generate_initial(seed, &scenario)?;
    let nominal = simulate(&initial, &scenario, Mode::Nominal)?;
    let tunable = simulate(&initial, &scenario, Mode::Tunable)?;
    let from_nominal = simulate(&initial, &scenario, Mode::TunableFromNominal)?;

    for (name, traj) in [("nominal", &nominal), ("tunable", &tunable), ("tunable-from-nominal", &from_nominal)] {
        let costs = contact_costs(traj);
        println!(
            "{name:>22}: {} contact samples, median f = {:.3e}, windows {:?}",
            costs.len(),
            median(costs),
            contact_windows(traj)
                .iter()
                .map(|(a, b)| format!("[{a:.2}, {b:.2}]"))
                .collect::<Vec<_>>()
        );
    }
    let ratio = median(contact_costs(&tunable)) / median(contact_costs(&nominal));
    println!("median cost ratio tunable / nominal = {ratio:.3e}");

    let dev = barycenter_deviation(&from_nominal, &nominal)?;
    let dx: Vec<f64> = dev.iter().map(|d| d[0].abs()).collect();
    let peak = dx.iter().copied().fold(0.0, f64::max);
    println!("barycenter x deviation: median {:.3e} %, peak {peak:.3e} %", median(dx.clone()));
    for (rec, d) in nominal.records.iter().zip(&dx).step_by(scenario.n_steps() / 20) {
        println!("  t = {:5.2}  dev_x = {d:.3e} %", rec.time);
    }
    Ok(())
}
