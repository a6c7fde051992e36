use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::controller::{DesiredImpedance, GammaForm};
use crate::dynamics::{RobotState, SwarmModel};
use crate::error::{Error, Result};
use crate::harness::init::default_box_side;
use crate::potentials::{Obstacle, PotentialParams};
use crate::topology::SwarmTopology;

/// Which scaling policy drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Constant gain `alpha_nominal` on every edge.
    Nominal,
    /// Contact controller, idle gain 1.
    Tunable,
    /// Contact controller, idle gain `alpha_nominal`.
    TunableFromNominal,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Nominal, Mode::Tunable, Mode::TunableFromNominal];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Nominal => "nominal",
            Mode::Tunable => "tunable",
            Mode::TunableFromNominal => "tunable-from-nominal",
        }
    }

    pub fn is_tunable(&self) -> bool {
        !matches!(self, Mode::Nominal)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}` (nominal | tunable | tunable-from-nominal)")))
    }
}

/// Where the point obstacle goes once the initial swarm is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObstaclePlacement {
    /// On the drive axis, `offset` ahead of the initial barycenter.
    AheadOfBarycenter { offset: f64 },
    /// On the drive axis through the initial barycenter, at the nearest
    /// point ahead that is `clearance` beyond every robot's `δd` reach; no
    /// robot starts in contact.
    OutOfReach { clearance: f64 },
    At(Vector3<f64>),
}

/// Random initial placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSpec {
    /// Extra clearance above `δs` for every initial pair.
    pub margin: f64,
    /// Side of the sampling cube; sized from `n_robots` and `δd` when unset.
    pub box_side: Option<f64>,
    /// Rejection budget per robot.
    pub max_attempts: usize,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            margin: 3.0,
            box_side: None,
            max_attempts: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n_robots: usize,
    pub potential: PotentialParams,
    pub obstacle: Option<ObstaclePlacement>,
    /// `F^c_i`, identical for all robots.
    pub drive_force: Vector3<f64>,
    pub beta: f64,
    pub masses: Vec<f64>,
    pub local_damping: Vec<f64>,
    pub impedance: DesiredImpedance,
    pub alpha_nominal: f64,
    pub alpha_bounds: (f64, f64),
    pub tune_damping: bool,
    pub gamma_form: GammaForm,
    pub dt: f64,
    pub horizon: f64,
    pub t_bar: f64,
    pub seed: u64,
    pub init: InitSpec,
}

impl Scenario {
    /// Reference parameter set, sized to `n_robots`.
    pub fn reference(n_robots: usize) -> Self {
        let dt = 1e-3;
        let mut s = Self {
            n_robots,
            potential: PotentialParams::default(),
            obstacle: None,
            drive_force: Vector3::new(1.0, 0.0, 0.0),
            beta: 1.0,
            masses: vec![1.0; n_robots],
            local_damping: vec![1.0; n_robots],
            impedance: DesiredImpedance::default(),
            alpha_nominal: 30.0,
            alpha_bounds: (1e-4, 1e2),
            tune_damping: true,
            gamma_form: GammaForm::Residual,
            dt,
            horizon: 10.0,
            t_bar: 10.0 * dt,
            seed: 0,
            init: InitSpec::default(),
        };
        s.obstacle = Some(ObstaclePlacement::AheadOfBarycenter {
            offset: s.default_obstacle_offset(),
        });
        s
    }

    /// Half the sampling cube plus `0.8 δd`: the obstacle starts just out of
    /// reach of most robots and the drive brings the front into contact
    /// within a few seconds.
    pub fn default_obstacle_offset(&self) -> f64 {
        let side = self.init.box_side.unwrap_or_else(|| default_box_side(self));
        0.5 * side + 0.8 * self.potential.delta_d
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.n_robots < 2 {
            return bad(format!("n_robots must be at least 2, got {}", self.n_robots));
        }
        self.potential.validate()?;
        self.impedance.validate()?;
        if self.masses.len() != self.n_robots || self.local_damping.len() != self.n_robots {
            return bad("masses and local_damping need one entry per robot".into());
        }
        if self.masses.iter().chain(&self.local_damping).any(|v| !(*v > 0.0)) {
            return bad("masses and local damping must be positive".into());
        }
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if !(self.dt > 0.0) || !(self.t_bar > 0.0) || !(self.horizon > 0.0) {
            return bad(format!(
                "dt, T_bar and horizon must be positive (dt = {}, T_bar = {}, horizon = {})",
                self.dt, self.t_bar, self.horizon
            ));
        }
        if self.horizon < self.dt {
            return bad(format!("horizon {} is shorter than dt {}", self.horizon, self.dt));
        }
        let (lo, hi) = self.alpha_bounds;
        if !(0.0 < lo && lo < hi) {
            return bad(format!("alpha bounds must satisfy 0 < min < max, got ({lo}, {hi})"));
        }
        if !(self.alpha_nominal > 0.0) {
            return bad(format!("alpha_nominal must be positive, got {}", self.alpha_nominal));
        }
        if !self.drive_force.iter().all(|c| c.is_finite()) {
            return bad("drive force must be finite".into());
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Gain carried by unscaled edges in `mode`.
    pub fn idle_gain(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Tunable => 1.0,
            Mode::Nominal | Mode::TunableFromNominal => self.alpha_nominal,
        }
    }

    fn drive_axis(&self) -> Vector3<f64> {
        if self.drive_force.norm() > 0.0 {
            self.drive_force.normalize()
        } else {
            Vector3::x()
        }
    }

    pub fn resolve_obstacle(&self, initial: &RobotState) -> Option<Obstacle> {
        let position = match self.obstacle? {
            ObstaclePlacement::At(p) => p,
            ObstaclePlacement::AheadOfBarycenter { offset } => {
                let axis = self.drive_axis();
                initial.barycenter() + offset * axis
            }
            ObstaclePlacement::OutOfReach { clearance } => {
                let axis = self.drive_axis();
                let bary = initial.barycenter();
                let reach = self.potential.delta_d + clearance;
                let offset = initial
                    .positions
                    .iter()
                    .map(|x| {
                        let along = (x - bary).dot(&axis);
                        let across2 = ((x - bary) - along * axis).norm_squared();
                        along + (reach * reach - across2).max(0.0).sqrt()
                    })
                    .fold(0.0, f64::max);
                bary + offset * axis
            }
        };
        Some(Obstacle::new(position, self.potential))
    }

    pub fn model(&self, initial: &RobotState) -> Result<SwarmModel> {
        Ok(SwarmModel {
            topology: SwarmTopology::new(self.n_robots)?,
            potential: self.potential,
            obstacle: self.resolve_obstacle(initial),
            drive: self.drive_force,
            beta: self.beta,
        })
    }
}
