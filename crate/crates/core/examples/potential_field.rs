//! Tabulate the pair potential, its force and the obstacle push along a line.
//!
//! cargo run --example potential_field -- [delta_s] [delta_d] [R]

use nalgebra::Vector3;
use swarm_impedance::potentials::{pair_force_magnitude, pair_potential, Obstacle, PotentialParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let d = PotentialParams::default();
    let p = PotentialParams::new(
        args.first().copied().unwrap_or(d.delta_s),
        args.get(1).copied().unwrap_or(d.delta_d),
        args.get(2).copied().unwrap_or(d.range),
        d.k_c,
    )?;
    println!("delta_s = {}, delta_d = {}, R = {}, plateau = {:.4}", p.delta_s, p.delta_d, p.range, p.plateau());

    let obstacle = Obstacle::new(Vector3::zeros(), p);
    println!("{:>8} {:>12} {:>12} {:>12}", "d", "V(d)", "dV/dd", "|F^e|");
    let mut dist = p.delta_s + 0.25;
    while dist <= p.range + 3.0 {
        let v = pair_potential(dist, &p)?;
        let f = pair_force_magnitude(dist, &p)?;
        let fe = obstacle.force(&Vector3::new(dist, 0.0, 0.0))?.norm();
        println!("{dist:8.2} {v:12.5} {f:12.5} {fe:12.5}");
        dist += if dist < p.delta_s + 2.0 { 0.25 } else { 1.0 };
    }
    // inside the safety distance the potential is undefined
    println!("d = delta_s: {}", pair_potential(p.delta_s, &p).unwrap_err());
    Ok(())
}
