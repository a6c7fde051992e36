//! Edge stacking, proximity neighborhoods and the weighted Laplacian of a
//! small random swarm.
//!
//! cargo run --example graph_laplacian -- [N] [seed]

use swarm_impedance::harness::{generate_initial, Scenario};
use swarm_impedance::topology::{neighborhoods, SwarmTopology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let n = args.first().copied().unwrap_or(5) as usize;
    let seed = args.get(1).copied().unwrap_or(0);

    let scenario = Scenario::reference(n);
    let state = generate_initial(seed, &scenario)?;
    let topo = SwarmTopology::new(n)?;
    let range = scenario.potential.range;

    println!("{n} robots, {} edges", topo.n_edges());
    let mut weights = Vec::with_capacity(topo.n_edges());
    for (k, &(i, j)) in topo.edges().iter().enumerate() {
        let d = (state.positions[i] - state.positions[j]).norm();
        let w = if d <= range { 1.0 } else { 0.0 };
        weights.push(w);
        println!("  e{k:<3} ({}, {})  |x_i - x_j| = {d:7.3}  weight {w}", i + 1, j + 1);
    }
    for nb in neighborhoods(&state.positions, range) {
        let ids: Vec<usize> = nb.neighbor_ids.iter().map(|j| j + 1).collect();
        println!("  robot {}: neighbors {ids:?}", nb.robot_id + 1);
    }

    let lap = topo.weighted_laplacian(&weights)?;
    println!("L = E W Eᵀ:{lap:.0}");
    let mut eig: Vec<f64> = lap.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    println!("eigenvalues {eig:.4?}");
    println!("algebraic connectivity {:.4}", eig[1]);
    Ok(())
}
