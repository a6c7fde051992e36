//! Run many seeds in all three modes in parallel and tabulate the outcome.
//! `SWARM_SIM_THREADS` caps the worker count.
//!
//! cargo run --release --example batch_seeds -- [N] [seeds] [horizon] [offset | cCLEARANCE]

use swarm_impedance::energy::CertificateStatus;
use swarm_impedance::harness::{contact_windows, run_batch, BatchJob, Mode, ObstaclePlacement, RunSummary, Scenario};
use swarm_impedance::simulation::SimOptions;
use swarm_impedance::Error;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: f64| args.get(i).map_or(Ok(default), |s| s.parse::<f64>());
    let n = arg(0, 8.0)? as usize;
    let seeds = arg(1, 8.0)? as u64;
    let horizon = arg(2, 5.0)?;

    let mut base = Scenario::reference(n).with_horizon(horizon);
    // `30` puts the obstacle 30 ahead of the barycenter, `c1` just out of
    // every robot's reach with clearance 1
    if let Some(place) = args.get(3) {
        base.obstacle = Some(match place.strip_prefix('c') {
            Some(clearance) => ObstaclePlacement::OutOfReach {
                clearance: clearance.parse()?,
            },
            None => ObstaclePlacement::AheadOfBarycenter { offset: place.parse()? },
        });
    }
    let jobs: Vec<BatchJob> = (0..seeds)
        .flat_map(|seed| {
            let scenario = base.clone().with_seed(seed);
            Mode::ALL.map(|mode| BatchJob {
                scenario: scenario.clone(),
                mode,
            })
        })
        .collect();

    let results = run_batch(&jobs, SimOptions::default());
    println!(
        "{:>5} {:>21} {:>8} {:>8} {:>9} {:>9} {:>9} {:>9}",
        "seed", "mode", "unscaled", "scaled", "contact", "first", "min pair", "min obs"
    );
    let mut aborted = 0;
    for (job, result) in jobs.iter().zip(results) {
        match result {
            Ok(traj) => {
                let s = RunSummary::new(&traj, job.scenario.seed);
                let first = contact_windows(&traj).first().map_or(f64::NAN, |w| w.0);
                let v = |st: CertificateStatus| match st {
                    CertificateStatus::Pass => "pass",
                    CertificateStatus::Fail => "FAIL",
                    CertificateStatus::PreconditionViolated { .. } => "n/a",
                };
                println!(
                    "{:>5} {:>21} {:>8} {:>8} {:>9} {:>9.2} {:>9.3} {:>9.3}",
                    job.scenario.seed,
                    job.mode.as_str(),
                    v(s.nominal.status),
                    v(s.scaled.status),
                    s.contact_steps,
                    first,
                    s.min_pair_distance,
                    s.min_obstacle_distance
                );
            }
            Err(Error::Aborted { step, source, .. }) => {
                aborted += 1;
                println!("{:>5} {:>21}  aborted at step {step}: {source}", job.scenario.seed, job.mode.as_str());
            }
            Err(e) => return Err(e.into()),
        }
    }
    println!("{aborted} of {} runs aborted", jobs.len());
    Ok(())
}
