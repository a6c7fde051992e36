//! Local stiffness and damping tuning for the robot in contact.
//!
//! The robot touching the environment sees its neighbors' coupling as one
//! equivalent spring `κ_n (x_i - x̄)` and one equivalent damper
//! `β_n (v_i - v̄)`. Every `T̄` seconds it picks the elastic scale `α*` that
//! brings the spring closest to the desired stiffness `κ_d` (a scalar
//! quadratic program over `[α_m, α_M]`), picks the viscous scale `γ` that makes
//! `β_n = β_d`, and broadcasts both to its in-range neighbors.

use log::debug;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DampingSpec, RobotState, ScalingState, SwarmModel};
use crate::error::{Error, Result};
use crate::topology::SwarmTopology;

/// Lower clamp on `γ`; keeps the scaled damper strictly positive.
pub const GAMMA_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesiredImpedance {
    pub kappa_d: f64,
    pub beta_d: f64,
    /// Rest length of the equivalent spring.
    pub rest_length: f64,
    /// Reference speed offset of the equivalent damper.
    pub velocity_offset: f64,
}

impl Default for DesiredImpedance {
    fn default() -> Self {
        Self {
            kappa_d: 1.0,
            beta_d: 1.0,
            rest_length: 1.0,
            velocity_offset: 1.0,
        }
    }
}

impl DesiredImpedance {
    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa_d, self.beta_d, self.rest_length, self.velocity_offset];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!("impedance values must be positive: {self:?}")))
        }
    }
}

/// How `γ` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaForm {
    /// `β_d |v_i - v̄| / |D|`, with the residual velocity measured.
    #[default]
    Residual,
    /// `β_d Δ_v / |D|`.
    RestLength,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentSpring {
    pub rest_position: Vector3<f64>,
    pub stiffness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentDamper {
    pub reference_velocity: Vector3<f64>,
    pub damping: f64,
}

/// Full equivalent impedance seen by the contact robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentImpedance {
    pub spring: EquivalentSpring,
    pub damper: Option<EquivalentDamper>,
    /// `Σ_j κ_ij (x_i - x_j)`.
    pub elastic: Vector3<f64>,
    /// `Σ_j β_ij (v_i - v_j)`.
    pub viscous: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Contact {
    pub robot: Option<usize>,
    /// More than one robot felt the environment; the strongest one won.
    pub multiple: bool,
}

/// The robot with a nonzero environment force. With several candidates the
/// largest force wins (lowest index on exact ties) and `multiple` is set.
pub fn detect_contact(env_forces: &[Vector3<f64>]) -> Contact {
    let mut best: Option<(usize, f64)> = None;
    let mut count = 0;
    for (i, f) in env_forces.iter().enumerate() {
        let norm = f.norm();
        if norm > 0.0 {
            count += 1;
            if best.is_none_or(|(_, b)| norm > b) {
                best = Some((i, norm));
            }
        }
    }
    Contact {
        robot: best.map(|(i, _)| i),
        multiple: count > 1,
    }
}

/// Rest position on the far side of the net elastic pull, at distance
/// `rest_length` from `x_i`, and stiffness `κ_n = α |S| / Δ`.
pub fn equivalent_spring(
    xi: &Vector3<f64>,
    elastic: &Vector3<f64>,
    rest_length: f64,
    alpha: f64,
) -> Result<EquivalentSpring> {
    let norm = elastic.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("no net elastic force on the contact robot"));
    }
    Ok(EquivalentSpring {
        rest_position: xi - rest_length * elastic / norm,
        stiffness: alpha * norm / rest_length,
    })
}

pub fn equivalent_damper(
    vi: &Vector3<f64>,
    viscous: &Vector3<f64>,
    velocity_offset: f64,
    gamma: f64,
) -> Result<EquivalentDamper> {
    let norm = viscous.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("no net viscous force on the contact robot"));
    }
    Ok(EquivalentDamper {
        reference_velocity: vi - velocity_offset * viscous / norm,
        damping: gamma * norm / velocity_offset,
    })
}

/// `|κ_d (x_i - x̄) - α S|²`.
pub fn cost(alpha: f64, xi: &Vector3<f64>, rest: &Vector3<f64>, kappa_d: f64, elastic: &Vector3<f64>) -> f64 {
    (kappa_d * (xi - rest) - alpha * elastic).norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSolution {
    pub alpha: f64,
    pub unclamped: f64,
}

impl AlphaSolution {
    pub fn is_interior(&self) -> bool {
        self.alpha == self.unclamped
    }
}

/// Minimize `|κ_d (x_i - x̄) - α S|²` over `α ∈ [α_m, α_M]`.
///
/// The cost is a convex parabola in `α`, so the box minimizer is the clamped
/// projection `α = ⟨κ_d (x_i - x̄), S⟩ / |S|²`.
pub fn solve_alpha(
    xi: &Vector3<f64>,
    rest: &Vector3<f64>,
    kappa_d: f64,
    elastic: &Vector3<f64>,
    bounds: (f64, f64),
) -> Result<AlphaSolution> {
    let (lo, hi) = bounds;
    if !(0.0 < lo && lo < hi) {
        return Err(Error::InvalidScenario(format!("alpha bounds ({lo}, {hi})")));
    }
    let s2 = elastic.norm_squared();
    if s2 == 0.0 {
        return Err(Error::Degenerate("no net elastic force on the contact robot"));
    }
    let unclamped = (kappa_d * (xi - rest)).dot(elastic) / s2;
    Ok(AlphaSolution {
        alpha: unclamped.clamp(lo, hi),
        unclamped,
    })
}

/// Viscous scale that makes the equivalent damping equal `β_d`.
pub fn compute_gamma(
    vi: &Vector3<f64>,
    reference_velocity: &Vector3<f64>,
    viscous: &Vector3<f64>,
    beta_d: f64,
    velocity_offset: f64,
    form: GammaForm,
) -> Result<f64> {
    let norm = viscous.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("no net viscous force on the contact robot"));
    }
    let offset = match form {
        GammaForm::Residual => (vi - reference_velocity).norm(),
        GammaForm::RestLength => velocity_offset,
    };
    Ok((beta_d * offset / norm).max(GAMMA_FLOOR))
}

/// Scale the edges between `robot` and its in-range neighbors, put every
/// other edge back to idle. Returns the number of neighbors reached.
pub fn apply_scaling(
    scaling: &mut ScalingState,
    topology: &SwarmTopology,
    positions: &[Vector3<f64>],
    range: f64,
    robot: usize,
    alpha: f64,
    gamma: f64,
) -> Result<usize> {
    let (lo, hi) = scaling.alpha_bounds;
    if !(lo <= alpha && alpha <= hi) {
        return Err(Error::AlphaOutOfBounds { alpha, min: lo, max: hi });
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidScenario(format!("gamma must be positive, got {gamma}")));
    }
    let before = (scaling.alpha_edges.clone(), scaling.c_edges.clone());
    let mut reached = 0;
    for (k, &(i, j)) in topology.edges().iter().enumerate() {
        let touches = i == robot || j == robot;
        if touches && (positions[i] - positions[j]).norm() <= range {
            scaling.alpha_edges[k] = alpha;
            scaling.c_edges[k] = gamma;
            reached += 1;
        } else {
            scaling.alpha_edges[k] = scaling.idle_alpha;
            scaling.c_edges[k] = 1.0;
        }
    }
    scaling.contact_robot = Some(robot);
    scaling.alpha = alpha;
    scaling.gamma = gamma;
    if before.0 != scaling.alpha_edges || before.1 != scaling.c_edges {
        scaling.epoch += 1;
    }
    Ok(reached)
}

/// What the plant looks like at a controller instant.
pub struct PlantView<'a> {
    pub state: &'a RobotState,
    pub model: &'a SwarmModel,
    pub damping: &'a DampingSpec,
    pub env_forces: &'a [Vector3<f64>],
}

/// One recomputation of the scales by the contact robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerEvent {
    pub time: f64,
    pub robot: usize,
    pub multiple_contacts: bool,
    pub elastic_norm: f64,
    pub viscous_norm: f64,
    /// `None` when `|S| = 0` and the previous scale was held.
    pub alpha_solution: Option<AlphaSolution>,
    pub alpha: f64,
    /// `None` when `|D| = 0` (or damping tuning is off) and `γ` was held.
    pub gamma_computed: Option<f64>,
    pub gamma: f64,
    /// `κ_n` after applying `α`.
    pub kappa_n: f64,
    /// `β_n` after applying `γ`.
    pub beta_n: f64,
    /// Neighbors the new scales were broadcast to.
    pub broadcasts: usize,
}

/// Decides the edge scales during a run.
pub trait ScalingPolicy {
    /// Gain carried by unscaled edges.
    fn idle_gain(&self) -> f64;

    /// Called every step; the policy decides whether it is due.
    fn update(&mut self, view: &PlantView<'_>, scaling: &mut ScalingState) -> Result<Option<ControllerEvent>>;
}

/// Constant gain on every edge; never rescales.
#[derive(Debug, Clone, Copy)]
pub struct FixedGain(pub f64);

impl ScalingPolicy for FixedGain {
    fn idle_gain(&self) -> f64 {
        self.0
    }

    fn update(&mut self, _: &PlantView<'_>, _: &mut ScalingState) -> Result<Option<ControllerEvent>> {
        Ok(None)
    }
}

/// True when `now` lies within half a step of a multiple of `period`.
pub fn is_due(now: f64, period: f64, dt: f64) -> bool {
    let phase = now / period;
    (phase - phase.round()).abs() * period < 0.5 * dt
}

/// The periodic contact controller.
#[derive(Debug, Clone)]
pub struct InteractionController {
    pub impedance: DesiredImpedance,
    pub period: f64,
    pub dt: f64,
    pub idle_alpha: f64,
    pub tune_damping: bool,
    pub gamma_form: GammaForm,
}

impl InteractionController {
    /// Run one controller pass at `view.state.time` if it falls on the `T̄`
    /// grid.
    pub fn controller_update(
        &self,
        view: &PlantView<'_>,
        scaling: &mut ScalingState,
    ) -> Result<Option<ControllerEvent>> {
        if !is_due(view.state.time, self.period, self.dt) {
            return Ok(None);
        }
        let contact = detect_contact(view.env_forces);
        let Some(i) = contact.robot else {
            scaling.reset();
            return Ok(None);
        };
        let state = view.state;
        let model = view.model;
        let xi = state.positions[i];
        let vi = state.velocity(i);
        let elastic = model.net_elastic(&state.positions, i)?;
        let viscous = model.net_viscous(state, view.damping, i);
        let imp = &self.impedance;

        let held_alpha = scaling.alpha_for(i);
        let held_gamma = scaling.gamma_for(i);

        let alpha_solution = match equivalent_spring(&xi, &elastic, imp.rest_length, held_alpha) {
            Ok(spring) => Some(solve_alpha(&xi, &spring.rest_position, imp.kappa_d, &elastic, scaling.alpha_bounds)?),
            Err(Error::Degenerate(why)) => {
                debug!("t = {}: {why}, holding alpha = {held_alpha}", state.time);
                None
            }
            Err(e) => return Err(e),
        };
        let alpha = alpha_solution.map_or(held_alpha, |s| s.alpha);

        let gamma_computed = if self.tune_damping {
            match equivalent_damper(&vi, &viscous, imp.velocity_offset, held_gamma) {
                Ok(damper) => Some(compute_gamma(
                    &vi,
                    &damper.reference_velocity,
                    &viscous,
                    imp.beta_d,
                    imp.velocity_offset,
                    self.gamma_form,
                )?),
                Err(Error::Degenerate(why)) => {
                    debug!("t = {}: {why}, holding gamma = {held_gamma}", state.time);
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let gamma = gamma_computed.unwrap_or(if self.tune_damping { held_gamma } else { 1.0 });

        let broadcasts = apply_scaling(
            scaling,
            &model.topology,
            &state.positions,
            model.potential.range,
            i,
            alpha,
            gamma,
        )?;

        let elastic_norm = elastic.norm();
        let viscous_norm = viscous.norm();
        Ok(Some(ControllerEvent {
            time: state.time,
            robot: i,
            multiple_contacts: contact.multiple,
            elastic_norm,
            viscous_norm,
            alpha_solution,
            alpha,
            gamma_computed,
            gamma,
            kappa_n: alpha * elastic_norm / imp.rest_length,
            beta_n: gamma * viscous_norm / imp.velocity_offset,
            broadcasts,
        }))
    }
}

impl ScalingPolicy for InteractionController {
    fn idle_gain(&self) -> f64 {
        self.idle_alpha
    }

    fn update(&mut self, view: &PlantView<'_>, scaling: &mut ScalingState) -> Result<Option<ControllerEvent>> {
        self.controller_update(view, scaling)
    }
}

/// Adversarial schedule for stress-testing the scaled certificate: every
/// period a random robot gets a random in-bounds `α` and `γ`, both
/// log-uniform over the bounds, on its edges in range.
#[derive(Debug, Clone)]
pub struct RandomAlphaSchedule {
    pub period: f64,
    pub dt: f64,
    pub idle_alpha: f64,
    rng: ChaCha8Rng,
}

impl RandomAlphaSchedule {
    pub fn new(seed: u64, period: f64, dt: f64, idle_alpha: f64) -> Self {
        Self {
            period,
            dt,
            idle_alpha,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ScalingPolicy for RandomAlphaSchedule {
    fn idle_gain(&self) -> f64 {
        self.idle_alpha
    }

    fn update(&mut self, view: &PlantView<'_>, scaling: &mut ScalingState) -> Result<Option<ControllerEvent>> {
        if !is_due(view.state.time, self.period, self.dt) {
            return Ok(None);
        }
        let (lo, hi) = scaling.alpha_bounds;
        let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
        let robot = self.rng.gen_range(0..view.state.n_robots());
        let alpha = self.rng.gen_range(ln_lo..=ln_hi).exp().clamp(lo, hi);
        let gamma = self.rng.gen_range(ln_lo..=ln_hi).exp().clamp(lo, hi);
        let model = view.model;
        let broadcasts = apply_scaling(
            scaling,
            &model.topology,
            &view.state.positions,
            model.potential.range,
            robot,
            alpha,
            gamma,
        )?;
        Ok(Some(ControllerEvent {
            time: view.state.time,
            robot,
            multiple_contacts: false,
            elastic_norm: f64::NAN,
            viscous_norm: f64::NAN,
            alpha_solution: None,
            alpha,
            gamma_computed: Some(gamma),
            gamma,
            kappa_n: f64::NAN,
            beta_n: f64::NAN,
            broadcasts,
        }))
    }
}
