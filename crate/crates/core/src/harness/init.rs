use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::RobotState;
use crate::error::{Error, Result};
use crate::harness::scenario::Scenario;

/// Side of the sampling cube when the scenario does not fix one: roughly one
/// desired spacing per robot along each axis.
pub fn default_box_side(scenario: &Scenario) -> f64 {
    scenario.potential.delta_d * (scenario.n_robots as f64).cbrt()
}

/// Random swarm at rest, placed robot by robot by rejection sampling in the
/// cube `[0, side]³`.
///
/// A candidate is accepted when it keeps more than `δs + margin` from every
/// robot already placed and lies within `R` of at least one of them, so the
/// initial proximity graph is connected. Same seed, same swarm.
pub fn generate_initial(seed: u64, scenario: &Scenario) -> Result<RobotState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = scenario.init.box_side.unwrap_or_else(|| default_box_side(scenario));
    let clearance = scenario.potential.delta_s + scenario.init.margin;
    let range = scenario.potential.range;
    let mut positions: Vec<Vector3<f64>> = Vec::with_capacity(scenario.n_robots);

    for robot in 0..scenario.n_robots {
        let mut placed = false;
        for _ in 0..scenario.init.max_attempts {
            let candidate = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * side;
            let mut nearest = f64::INFINITY;
            let clear = positions.iter().all(|x| {
                let d = (x - candidate).norm();
                nearest = nearest.min(d);
                d > clearance
            });
            if clear && (positions.is_empty() || nearest <= range) {
                positions.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::InfeasibleDensity {
                robot,
                attempts: scenario.init.max_attempts,
            });
        }
    }
    RobotState::at_rest(positions, scenario.masses.clone(), scenario.local_damping.clone())
}
