//! Double-integrator swarm: force assembly with per-edge scaling and the
//! semi-implicit Euler integrator.
//!
//! The input force on robot `i` is
//!
//! ```text
//! w_i = - Σ_j α_k ∇V(x_i - x_j) - Σ_j c_k β_ij (v_i - v_j) + F^c_i - b_i v_i + F^e_i
//! ```
//!
//! where `k = k(i, j)` is the edge joining the pair. Unscaled edges carry the
//! policy's idle gain for `α_k` and `1` for `c_k`.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::potentials::{kappa, Obstacle, PotentialParams};
use crate::topology::SwarmTopology;

/// Positions, momenta and per-robot constants. Velocities are always derived
/// as `p_i / m_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub positions: Vec<Vector3<f64>>,
    pub momenta: Vec<Vector3<f64>>,
    pub masses: Vec<f64>,
    pub local_damping: Vec<f64>,
    pub time: f64,
}

impl RobotState {
    /// Robots at rest at the given positions.
    pub fn at_rest(positions: Vec<Vector3<f64>>, masses: Vec<f64>, local_damping: Vec<f64>) -> Result<Self> {
        let n = positions.len();
        let state = Self {
            momenta: vec![Vector3::zeros(); n],
            positions,
            masses,
            local_damping,
            time: 0.0,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        for (what, len) in [
            ("momenta", self.momenta.len()),
            ("masses", self.masses.len()),
            ("local damping", self.local_damping.len()),
        ] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    got: len,
                });
            }
        }
        if self.masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidScenario("masses must be positive".into()));
        }
        if self.local_damping.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::InvalidScenario("local damping must be positive".into()));
        }
        Ok(())
    }

    pub fn n_robots(&self) -> usize {
        self.positions.len()
    }

    pub fn velocity(&self, i: usize) -> Vector3<f64> {
        self.momenta[i] / self.masses[i]
    }

    pub fn velocities(&self) -> Vec<Vector3<f64>> {
        (0..self.n_robots()).map(|i| self.velocity(i)).collect()
    }

    pub fn kinetic_energy(&self, i: usize) -> f64 {
        self.momenta[i].norm_squared() / (2.0 * self.masses[i])
    }

    pub fn barycenter(&self) -> Vector3<f64> {
        let sum: Vector3<f64> = self.positions.iter().sum();
        sum / self.n_robots() as f64
    }
}

/// Per-edge elastic (`α_k`) and viscous (`c_k`) scales.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingState {
    pub alpha_edges: Vec<f64>,
    pub c_edges: Vec<f64>,
    pub alpha_bounds: (f64, f64),
    /// Gain carried by every edge that is not being scaled.
    pub idle_alpha: f64,
    pub contact_robot: Option<usize>,
    /// Value broadcast to the contact robot's edges.
    pub alpha: f64,
    pub gamma: f64,
    /// Bumped whenever any edge scale changes.
    pub epoch: u64,
}

impl ScalingState {
    pub fn identity(n_edges: usize, idle_alpha: f64, alpha_bounds: (f64, f64)) -> Self {
        Self {
            alpha_edges: vec![idle_alpha; n_edges],
            c_edges: vec![1.0; n_edges],
            alpha_bounds,
            idle_alpha,
            contact_robot: None,
            alpha: idle_alpha,
            gamma: 1.0,
            epoch: 0,
        }
    }

    /// Elastic gain currently applied around robot `i`.
    pub fn alpha_for(&self, i: usize) -> f64 {
        if self.contact_robot == Some(i) {
            self.alpha
        } else {
            self.idle_alpha
        }
    }

    pub fn gamma_for(&self, i: usize) -> f64 {
        if self.contact_robot == Some(i) {
            self.gamma
        } else {
            1.0
        }
    }

    pub fn is_idle(&self) -> bool {
        self.contact_robot.is_none()
            && self.alpha_edges.iter().all(|&a| a == self.idle_alpha)
            && self.c_edges.iter().all(|&c| c == 1.0)
    }

    /// Smallest and largest `α_k` over all edges.
    pub fn alpha_range(&self) -> (f64, f64) {
        self.alpha_edges
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)))
    }

    /// Put every edge back to the idle gain.
    pub fn reset(&mut self) {
        let changed = !self.is_idle();
        self.alpha_edges.iter_mut().for_each(|a| *a = self.idle_alpha);
        self.c_edges.iter_mut().for_each(|c| *c = 1.0);
        self.contact_robot = None;
        self.alpha = self.idle_alpha;
        self.gamma = 1.0;
        if changed {
            self.epoch += 1;
        }
    }
}

/// Inter-robot damping weights `β_k`, zero for pairs out of range.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingSpec {
    pub beta_edges: Vec<f64>,
}

impl DampingSpec {
    /// Uniform `beta` on every pair within `range`.
    pub fn uniform(topology: &SwarmTopology, positions: &[Vector3<f64>], beta: f64, range: f64) -> Self {
        let beta_edges = topology
            .edges()
            .iter()
            .map(|&(i, j)| {
                if (positions[i] - positions[j]).norm() <= range {
                    beta
                } else {
                    0.0
                }
            })
            .collect();
        Self { beta_edges }
    }
}

/// The fixed parts of the plant: graph, coupling law, environment, drive.
#[derive(Debug, Clone)]
pub struct SwarmModel {
    pub topology: SwarmTopology,
    pub potential: PotentialParams,
    pub obstacle: Option<Obstacle>,
    /// `F^c_i`, identical for every robot.
    pub drive: Vector3<f64>,
    /// Uniform inter-robot damping for neighbors.
    pub beta: f64,
}

impl SwarmModel {
    pub fn damping(&self, positions: &[Vector3<f64>]) -> DampingSpec {
        DampingSpec::uniform(&self.topology, positions, self.beta, self.potential.range)
    }

    /// `F^e_i` for every robot.
    pub fn environment_forces(&self, positions: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
        match &self.obstacle {
            None => Ok(vec![Vector3::zeros(); positions.len()]),
            Some(obs) => positions.iter().map(|x| obs.force(x)).collect(),
        }
    }

    /// Net unscaled elastic vector `Σ_j κ_ij (x_i - x_j)` seen by robot `i`.
    pub fn net_elastic(&self, positions: &[Vector3<f64>], i: usize) -> Result<Vector3<f64>> {
        let mut s = Vector3::zeros();
        for (j, xj) in positions.iter().enumerate() {
            if j == i {
                continue;
            }
            let diff = positions[i] - xj;
            if diff.norm() > self.potential.range {
                continue;
            }
            s += kappa(&positions[i], xj, &self.potential)? * diff;
        }
        Ok(s)
    }

    /// Net unscaled viscous vector `Σ_j β_ij (v_i - v_j)` seen by robot `i`.
    pub fn net_viscous(&self, state: &RobotState, damping: &DampingSpec, i: usize) -> Vector3<f64> {
        let vi = state.velocity(i);
        self.topology
            .incident_edges(i)
            .map(|k| {
                let (a, b) = self.topology.edge(k);
                let j = if a == i { b } else { a };
                damping.beta_edges[k] * (vi - state.velocity(j))
            })
            .sum()
    }
}

/// The five additive contributions to one robot's input force.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForceParts {
    pub elastic: Vector3<f64>,
    pub viscous: Vector3<f64>,
    pub drive: Vector3<f64>,
    pub local_damping: Vector3<f64>,
    pub environment: Vector3<f64>,
}

impl ForceParts {
    /// Sum in the fixed order elastic, viscous, drive, local damping,
    /// environment.
    pub fn total(&self) -> Vector3<f64> {
        self.elastic + self.viscous + self.drive + self.local_damping + self.environment
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forces {
    pub total: Vec<Vector3<f64>>,
    pub parts: Vec<ForceParts>,
    /// Closest robot pair at assembly time.
    pub min_pair_distance: f64,
    /// Closest robot to the obstacle, `inf` without one.
    pub min_obstacle_distance: f64,
}

impl Forces {
    pub fn environment(&self) -> Vec<Vector3<f64>> {
        self.parts.iter().map(|p| p.environment).collect()
    }
}

/// Assemble `w_i` for every robot, together with its decomposition.
///
/// Edges are visited in stacking order, so the result does not depend on
/// anything but the inputs.
pub fn assemble_forces(
    state: &RobotState,
    scaling: &ScalingState,
    damping: &DampingSpec,
    model: &SwarmModel,
) -> Result<Forces> {
    let n = state.n_robots();
    let topo = &model.topology;
    if topo.n_robots() != n {
        return Err(Error::DimensionMismatch {
            what: "robots",
            expected: topo.n_robots(),
            got: n,
        });
    }
    let velocities = state.velocities();
    let mut parts = vec![ForceParts::default(); n];
    let mut min_pair = f64::INFINITY;

    for (k, &(i, j)) in topo.edges().iter().enumerate() {
        let diff = state.positions[i] - state.positions[j];
        let d = diff.norm();
        min_pair = min_pair.min(d);
        if d <= model.potential.delta_s {
            return Err(Error::BarrierViolation {
                distance: d,
                delta_s: model.potential.delta_s,
            });
        }
        if d <= model.potential.range {
            let g = scaling.alpha_edges[k] * kappa(&state.positions[i], &state.positions[j], &model.potential)? * diff;
            parts[i].elastic -= g;
            parts[j].elastic += g;
        }
        let beta = damping.beta_edges[k];
        if beta != 0.0 {
            let u = scaling.c_edges[k] * beta * (velocities[i] - velocities[j]);
            parts[i].viscous -= u;
            parts[j].viscous += u;
        }
    }

    let mut min_obs = f64::INFINITY;
    for (i, part) in parts.iter_mut().enumerate() {
        part.drive = model.drive;
        part.local_damping = -state.local_damping[i] * velocities[i];
        if let Some(obs) = &model.obstacle {
            min_obs = min_obs.min((state.positions[i] - obs.position).norm());
            part.environment = obs.force(&state.positions[i])?;
        }
    }
    let total = parts.iter().map(ForceParts::total).collect();
    Ok(Forces {
        total,
        parts,
        min_pair_distance: min_pair,
        min_obstacle_distance: min_obs,
    })
}

/// One semi-implicit Euler step: momenta first, then positions with the
/// updated momenta.
pub fn step(state: &RobotState, forces: &[Vector3<f64>], dt: f64) -> Result<RobotState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidScenario(format!("dt must be positive, got {dt}")));
    }
    let mut next = state.clone();
    for (i, w) in forces.iter().enumerate() {
        if !w.iter().all(|c| c.is_finite()) {
            return Err(Error::NumericBlowup { robot: i });
        }
        next.momenta[i] += dt * w;
        next.positions[i] += dt * next.momenta[i] / next.masses[i];
    }
    next.time += dt;
    Ok(next)
}
