//! Scenario files.
//!
//! A scenario file is a list of `key = value` lines; keys use dotted section
//! names and `#` starts a comment. The grammar is the TOML subset of dotted
//! keys with numbers, booleans, strings and 3-element arrays, so `[section]`
//! headers work as well.
//!
//! ```text
//! n_robots = 16                 # required
//! seed = 0
//!
//! potential.delta_s = 5         # required
//! potential.delta_d = 15        # required
//! potential.R = 22              # required
//! potential.k_c = 1
//!
//! obstacle.enabled = true
//! obstacle.offset = 30          # ahead of the initial barycenter, along the drive;
//!                               # default half the box side + 0.8 delta_d
//! obstacle.clearance = 1        # or: just beyond every robot's reach
//! obstacle.position = [1, 2, 3] # or: fixed position
//!
//! drive.magnitude = 1           # F^c per robot, along +x
//! robot.mass = 1
//! robot.local_damping = 1
//! coupling.beta = 1
//!
//! impedance.kappa_d = 1
//! impedance.beta_d = 1
//! impedance.Delta = 1
//! impedance.Delta_v = 1
//!
//! controller.alpha_nominal = 30
//! controller.alpha_min = 1e-4
//! controller.alpha_max = 100
//! controller.T_bar = 0.01       # default 10 * dt
//! controller.tune_damping = true
//! controller.gamma_form = "residual"   # or "rest_length"
//!
//! time.dt = 0.001
//! time.horizon = 10
//!
//! init.margin = 3
//! init.box_side = 38            # default delta_d * cbrt(n_robots)
//! init.max_attempts = 10000
//! ```

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use crate::controller::GammaForm;
use crate::error::{Error, Result};
use crate::harness::scenario::{InitSpec, ObstaclePlacement, Scenario};
use crate::potentials::PotentialParams;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_robots: Option<usize>,
    seed: Option<u64>,
    potential: Option<RawPotential>,
    obstacle: Option<RawObstacle>,
    drive: Option<RawDrive>,
    robot: Option<RawRobot>,
    coupling: Option<RawCoupling>,
    impedance: Option<RawImpedance>,
    controller: Option<RawController>,
    time: Option<RawTime>,
    init: Option<RawInit>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    delta_s: Option<f64>,
    delta_d: Option<f64>,
    #[serde(rename = "R")]
    range: Option<f64>,
    k_c: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    enabled: Option<bool>,
    offset: Option<f64>,
    clearance: Option<f64>,
    position: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    magnitude: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobot {
    mass: Option<f64>,
    local_damping: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImpedance {
    kappa_d: Option<f64>,
    beta_d: Option<f64>,
    #[serde(rename = "Delta")]
    rest_length: Option<f64>,
    #[serde(rename = "Delta_v")]
    velocity_offset: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    alpha_nominal: Option<f64>,
    alpha_min: Option<f64>,
    alpha_max: Option<f64>,
    #[serde(rename = "T_bar")]
    t_bar: Option<f64>,
    tune_damping: Option<bool>,
    gamma_form: Option<GammaForm>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Option<f64>,
    horizon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    margin: Option<f64>,
    box_side: Option<f64>,
    max_attempts: Option<usize>,
}

fn required<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing required field `{key}`")))
}

/// Parse and validate a scenario from text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_owned()))?;
    let n_robots = required(raw.n_robots, "n_robots")?;
    let mut s = Scenario::reference(n_robots);

    let pot = raw.potential.unwrap_or_default();
    s.potential = PotentialParams {
        delta_s: required(pot.delta_s, "potential.delta_s")?,
        delta_d: required(pot.delta_d, "potential.delta_d")?,
        range: required(pot.range, "potential.R")?,
        k_c: pot.k_c.unwrap_or(1.0),
    };
    if let Some(seed) = raw.seed {
        s.seed = seed;
    }

    if let Some(m) = raw.drive.and_then(|d| d.magnitude) {
        s.drive_force = Vector3::new(m, 0.0, 0.0);
    }
    let robot = raw.robot.unwrap_or_default();
    s.masses = vec![robot.mass.unwrap_or(1.0); n_robots];
    s.local_damping = vec![robot.local_damping.unwrap_or(1.0); n_robots];
    if let Some(beta) = raw.coupling.and_then(|c| c.beta) {
        s.beta = beta;
    }

    let imp = raw.impedance.unwrap_or_default();
    s.impedance.kappa_d = imp.kappa_d.unwrap_or(s.impedance.kappa_d);
    s.impedance.beta_d = imp.beta_d.unwrap_or(s.impedance.beta_d);
    s.impedance.rest_length = imp.rest_length.unwrap_or(s.impedance.rest_length);
    s.impedance.velocity_offset = imp.velocity_offset.unwrap_or(s.impedance.velocity_offset);

    let time = raw.time.unwrap_or_default();
    s.dt = time.dt.unwrap_or(s.dt);
    s.horizon = time.horizon.unwrap_or(s.horizon);

    let ctl = raw.controller.unwrap_or_default();
    s.alpha_nominal = ctl.alpha_nominal.unwrap_or(s.alpha_nominal);
    s.alpha_bounds = (
        ctl.alpha_min.unwrap_or(s.alpha_bounds.0),
        ctl.alpha_max.unwrap_or(s.alpha_bounds.1),
    );
    s.t_bar = ctl.t_bar.unwrap_or(10.0 * s.dt);
    s.tune_damping = ctl.tune_damping.unwrap_or(s.tune_damping);
    s.gamma_form = ctl.gamma_form.unwrap_or(s.gamma_form);

    let init = raw.init.unwrap_or_default();
    s.init = InitSpec {
        margin: init.margin.unwrap_or(s.init.margin),
        box_side: init.box_side,
        max_attempts: init.max_attempts.unwrap_or(s.init.max_attempts),
    };

    // after potential and init: the default offset depends on both
    let obs = raw.obstacle.unwrap_or_default();
    let placements = [obs.position.is_some(), obs.offset.is_some(), obs.clearance.is_some()];
    if placements.iter().filter(|&&p| p).count() > 1 {
        return Err(Error::Config(
            "set at most one of `obstacle.position`, `obstacle.offset`, `obstacle.clearance`".into(),
        ));
    }
    s.obstacle = if !obs.enabled.unwrap_or(true) {
        None
    } else if let Some(p) = obs.position {
        Some(ObstaclePlacement::At(Vector3::from(p)))
    } else if let Some(clearance) = obs.clearance {
        Some(ObstaclePlacement::OutOfReach { clearance })
    } else {
        Some(ObstaclePlacement::AheadOfBarycenter {
            offset: obs.offset.unwrap_or_else(|| s.default_obstacle_offset()),
        })
    };

    s.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Render a scenario back into the file format. Parsing the output yields
/// the same scenario, provided masses and local damping are uniform.
pub fn render_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let mut line = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    line("n_robots", s.n_robots.to_string());
    line("seed", s.seed.to_string());
    line("potential.delta_s", fmt(s.potential.delta_s));
    line("potential.delta_d", fmt(s.potential.delta_d));
    line("potential.R", fmt(s.potential.range));
    line("potential.k_c", fmt(s.potential.k_c));
    match s.obstacle {
        None => line("obstacle.enabled", "false".into()),
        Some(ObstaclePlacement::AheadOfBarycenter { offset }) => {
            line("obstacle.enabled", "true".into());
            line("obstacle.offset", fmt(offset));
        }
        Some(ObstaclePlacement::OutOfReach { clearance }) => {
            line("obstacle.enabled", "true".into());
            line("obstacle.clearance", fmt(clearance));
        }
        Some(ObstaclePlacement::At(p)) => {
            line("obstacle.enabled", "true".into());
            line("obstacle.position", format!("[{}, {}, {}]", fmt(p.x), fmt(p.y), fmt(p.z)));
        }
    }
    line("drive.magnitude", fmt(s.drive_force.x));
    line("robot.mass", fmt(s.masses[0]));
    line("robot.local_damping", fmt(s.local_damping[0]));
    line("coupling.beta", fmt(s.beta));
    line("impedance.kappa_d", fmt(s.impedance.kappa_d));
    line("impedance.beta_d", fmt(s.impedance.beta_d));
    line("impedance.Delta", fmt(s.impedance.rest_length));
    line("impedance.Delta_v", fmt(s.impedance.velocity_offset));
    line("controller.alpha_nominal", fmt(s.alpha_nominal));
    line("controller.alpha_min", fmt(s.alpha_bounds.0));
    line("controller.alpha_max", fmt(s.alpha_bounds.1));
    line("controller.T_bar", fmt(s.t_bar));
    line("controller.tune_damping", s.tune_damping.to_string());
    let form = match s.gamma_form {
        GammaForm::Residual => "residual",
        GammaForm::RestLength => "rest_length",
    };
    line("controller.gamma_form", format!("\"{form}\""));
    line("time.dt", fmt(s.dt));
    line("time.horizon", fmt(s.horizon));
    line("init.margin", fmt(s.init.margin));
    if let Some(side) = s.init.box_side {
        line("init.box_side", fmt(side));
    }
    line("init.max_attempts", s.init.max_attempts.to_string());
    out
}

/// Floats always carry a decimal point or exponent so TOML reads them back
/// as floats.
fn fmt(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains(['.', 'e', 'E', 'i', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}
