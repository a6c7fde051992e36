//! One controller pass by hand: a robot pressed against an obstacle, the
//! equivalent spring and damper its neighbors form, and the scales that
//! make them match the desired impedance.
//!
//! cargo run --example impedance_matching -- [seed]

use nalgebra::Vector3;
use swarm_impedance::controller::{
    compute_gamma, cost, detect_contact, equivalent_damper, equivalent_spring, solve_alpha,
};
use swarm_impedance::harness::{generate_initial, ObstaclePlacement, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    let mut scenario = Scenario::reference(8);
    let mut state = generate_initial(seed, &scenario)?;

    // put the obstacle 12 ahead of the leading robot, inside its reach
    let lead = (0..8).max_by(|&a, &b| state.positions[a].x.total_cmp(&state.positions[b].x)).unwrap();
    scenario.obstacle = Some(ObstaclePlacement::At(state.positions[lead] + Vector3::new(12.0, 0.0, 0.0)));
    for (i, v) in state.momenta.iter_mut().enumerate() {
        *v = Vector3::new(1.0 + 0.1 * i as f64, 0.0, 0.0) * state.masses[i];
    }

    let model = scenario.model(&state)?;
    let env = model.environment_forces(&state.positions)?;
    let contact = detect_contact(&env);
    let i = contact.robot.ok_or("no robot in contact")?;
    println!("contact robot {}: |F^e| = {:.4}", i + 1, env[i].norm());

    let imp = scenario.impedance;
    let xi = state.positions[i];
    let vi = state.velocity(i);
    let elastic = model.net_elastic(&state.positions, i)?;
    let viscous = model.net_viscous(&state, &model.damping(&state.positions), i);

    let spring = equivalent_spring(&xi, &elastic, imp.rest_length, 1.0)?;
    println!("|S| = {:.4}, unscaled stiffness κ_n = {:.4}, desired κ_d = {}", elastic.norm(), spring.stiffness, imp.kappa_d);

    let sol = solve_alpha(&xi, &spring.rest_position, imp.kappa_d, &elastic, scenario.alpha_bounds)?;
    let f0 = cost(1.0, &xi, &spring.rest_position, imp.kappa_d, &elastic);
    let f1 = cost(sol.alpha, &xi, &spring.rest_position, imp.kappa_d, &elastic);
    println!("α* = {:.6} (interior: {}), f(1) = {f0:.4e}, f(α*) = {f1:.4e}", sol.alpha, sol.is_interior());
    let scaled = equivalent_spring(&xi, &elastic, imp.rest_length, sol.alpha)?;
    println!("scaled stiffness κ_n = {:.6}", scaled.stiffness);

    let damper = equivalent_damper(&vi, &viscous, imp.velocity_offset, 1.0)?;
    let gamma = compute_gamma(&vi, &damper.reference_velocity, &viscous, imp.beta_d, imp.velocity_offset, scenario.gamma_form)?;
    let tuned = equivalent_damper(&vi, &viscous, imp.velocity_offset, gamma)?;
    println!(
        "|D| = {:.4}, unscaled β_n = {:.4}, γ = {gamma:.6}, scaled β_n = {:.6}, desired β_d = {}",
        viscous.norm(),
        damper.damping,
        tuned.damping,
        imp.beta_d
    );
    Ok(())
}
