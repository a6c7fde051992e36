//! The stepping loop: scaling policy, force assembly, energy ledger, record,
//! integrate.

use log::warn;
use nalgebra::Vector3;

use crate::controller::{
    cost, detect_contact, equivalent_spring, ControllerEvent, FixedGain, InteractionController, PlantView,
    ScalingPolicy,
};
use crate::dynamics::{assemble_forces, step, ForceParts, RobotState, ScalingState, SwarmModel};
use crate::energy::{EnergyLedger, LedgerInputs};
use crate::error::{Error, Result};
use crate::harness::scenario::{Mode, Scenario};
use crate::potentials::Obstacle;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Keep positions and velocities of every robot at every step.
    pub record_states: bool,
    /// Keep the per-robot force decomposition at every step.
    pub record_forces: bool,
}

/// Per-step summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub contact_robot: Option<usize>,
    pub multiple_contacts: bool,
    /// `f(α)` for the contact robot, `None` without contact.
    pub cost: Option<f64>,
    /// Elastic gain around the contact robot (idle gain without contact).
    pub alpha: f64,
    pub gamma: f64,
    pub barycenter: Vector3<f64>,
    pub min_pair_distance: f64,
    pub min_obstacle_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub positions: Vec<Vector3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
    pub forces: Option<Vec<ForceParts>>,
    pub alpha_edges: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunStats {
    pub controller_updates: usize,
    /// Scale messages sent to neighbors, one per neighbor per update.
    pub broadcasts: usize,
    pub degenerate_updates: usize,
    pub multi_contact_steps: usize,
    pub contact_steps: usize,
    pub min_pair_distance: f64,
    pub min_obstacle_distance: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub mode: Option<Mode>,
    pub dt: f64,
    pub idle_gain: f64,
    pub alpha_bounds: (f64, f64),
    pub obstacle: Option<Obstacle>,
    /// One record per sample, `t = 0, dt, ..., horizon`.
    pub records: Vec<StepRecord>,
    pub ledger: EnergyLedger,
    pub events: Vec<ControllerEvent>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: RobotState,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.time)
    }
}

/// The policy each mode runs with.
pub fn policy_for(scenario: &Scenario, mode: Mode) -> Box<dyn ScalingPolicy> {
    match mode {
        Mode::Nominal => Box::new(FixedGain(scenario.alpha_nominal)),
        Mode::Tunable | Mode::TunableFromNominal => Box::new(InteractionController {
            impedance: scenario.impedance,
            period: scenario.t_bar,
            dt: scenario.dt,
            idle_alpha: scenario.idle_gain(mode),
            tune_damping: scenario.tune_damping,
            gamma_form: scenario.gamma_form,
        }),
    }
}

pub fn simulate(initial: &RobotState, scenario: &Scenario, mode: Mode) -> Result<Trajectory> {
    simulate_with_options(initial, scenario, mode, SimOptions::default())
}

pub fn simulate_with_options(
    initial: &RobotState,
    scenario: &Scenario,
    mode: Mode,
    options: SimOptions,
) -> Result<Trajectory> {
    let mut policy = policy_for(scenario, mode);
    let mut traj = simulate_with(initial, scenario, policy.as_mut(), options)?;
    traj.mode = Some(mode);
    Ok(traj)
}

/// Elastic cost seen by robot `i` under the current scales.
fn contact_cost(model: &SwarmModel, scenario: &Scenario, state: &RobotState, scaling: &ScalingState, i: usize) -> Result<f64> {
    let imp = &scenario.impedance;
    let alpha = scaling.alpha_for(i);
    let elastic = model.net_elastic(&state.positions, i)?;
    let xi = state.positions[i];
    Ok(match equivalent_spring(&xi, &elastic, imp.rest_length, alpha) {
        Ok(spring) => cost(alpha, &xi, &spring.rest_position, imp.kappa_d, &elastic),
        Err(_) => (imp.kappa_d * imp.rest_length).powi(2),
    })
}

/// Run `scenario` from `initial` under an arbitrary scaling policy.
pub fn simulate_with(
    initial: &RobotState,
    scenario: &Scenario,
    policy: &mut dyn ScalingPolicy,
    options: SimOptions,
) -> Result<Trajectory> {
    scenario.validate()?;
    initial.validate()?;
    if initial.n_robots() != scenario.n_robots {
        return Err(Error::DimensionMismatch {
            what: "initial state robots",
            expected: scenario.n_robots,
            got: initial.n_robots(),
        });
    }
    let model = scenario.model(initial)?;
    let idle = policy.idle_gain();
    let mut scaling = ScalingState::identity(model.topology.n_edges(), idle, scenario.alpha_bounds);
    let mut ledger = EnergyLedger::new(idle);
    let steps = scenario.n_steps();
    let dt = scenario.dt;
    let t0 = initial.time;

    let mut records = Vec::with_capacity(steps + 1);
    let mut events = Vec::new();
    let mut snapshots = Vec::new();
    let mut stats = RunStats {
        min_pair_distance: f64::INFINITY,
        min_obstacle_distance: f64::INFINITY,
        ..RunStats::default()
    };
    let mut state = initial.clone();

    for n in 0..=steps {
        let mut advance = || -> Result<RobotState> {
            let damping = model.damping(&state.positions);
            let env = model.environment_forces(&state.positions)?;
            let view = PlantView {
                state: &state,
                model: &model,
                damping: &damping,
                env_forces: &env,
            };
            if let Some(ev) = policy.update(&view, &mut scaling)? {
                stats.controller_updates += 1;
                stats.broadcasts += ev.broadcasts;
                if ev.alpha_solution.is_none() || (scenario.tune_damping && ev.gamma_computed.is_none()) {
                    stats.degenerate_updates += 1;
                }
                events.push(ev);
            }

            let forces = assemble_forces(&state, &scaling, &damping, &model)?;
            let port: Vec<Vector3<f64>> = forces.parts.iter().map(|p| p.drive + p.environment).collect();
            ledger.update(
                &LedgerInputs {
                    state: &state,
                    scaling: &scaling,
                    damping: &damping,
                    topology: &model.topology,
                    potential: &model.potential,
                    port_forces: &port,
                },
                dt,
            )?;

            let contact = detect_contact(&env);
            let cost = match contact.robot {
                Some(i) => Some(contact_cost(&model, scenario, &state, &scaling, i)?),
                None => None,
            };
            if contact.robot.is_some() {
                stats.contact_steps += 1;
            }
            if contact.multiple {
                stats.multi_contact_steps += 1;
            }
            stats.min_pair_distance = stats.min_pair_distance.min(forces.min_pair_distance);
            stats.min_obstacle_distance = stats.min_obstacle_distance.min(forces.min_obstacle_distance);
            records.push(StepRecord {
                time: state.time,
                contact_robot: contact.robot,
                multiple_contacts: contact.multiple,
                cost,
                alpha: contact.robot.map_or(scaling.idle_alpha, |i| scaling.alpha_for(i)),
                gamma: contact.robot.map_or(1.0, |i| scaling.gamma_for(i)),
                barycenter: state.barycenter(),
                min_pair_distance: forces.min_pair_distance,
                min_obstacle_distance: forces.min_obstacle_distance,
            });
            if options.record_states || options.record_forces {
                snapshots.push(Snapshot {
                    time: state.time,
                    positions: state.positions.clone(),
                    velocities: state.velocities(),
                    forces: options.record_forces.then(|| forces.parts.clone()),
                    alpha_edges: options.record_forces.then(|| scaling.alpha_edges.clone()),
                });
            }

            if n < steps {
                // time from the step count, not by accumulation, so every
                // run shares the same grid
                step(&state, &forces.total, dt).map(|mut next| {
                    next.time = t0 + (n + 1) as f64 * dt;
                    next
                })
            } else {
                Ok(state.clone())
            }
        };
        match advance() {
            Ok(next) => state = next,
            Err(source) => {
                return Err(Error::Aborted {
                    step: n,
                    time: state.time,
                    source: Box::new(source),
                    snapshot: Box::new(state),
                })
            }
        }
    }

    if stats.multi_contact_steps > 0 {
        warn!(
            "{} of {} steps had several robots in contact at once",
            stats.multi_contact_steps,
            steps + 1
        );
    }

    Ok(Trajectory {
        mode: None,
        dt,
        idle_gain: idle,
        alpha_bounds: scenario.alpha_bounds,
        obstacle: model.obstacle,
        records,
        ledger,
        events,
        snapshots,
        final_state: state,
        stats,
    })
}
