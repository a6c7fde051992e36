//! Inter-robot coupling potential and the point-obstacle repulsion.
//!
//! The force law, written as the derivative of the potential with respect to
//! the pair distance `d`, is
//!
//! ```text
//! dV/dd = k_c (d - δd) / (d - δs)              δs < d <= δd   (repulsive)
//! dV/dd = k_c (d - δd) (R - d) / (R - δd)      δd <= d <= R   (attractive)
//! dV/dd = 0                                    d > R
//! ```
//!
//! and `V` is its integral anchored at `V(δd) = 0`. The repulsive branch
//! diverges at the safety distance `δs`, the attractive branch fades to zero
//! at the interaction range `R`, so both force and potential are continuous.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    /// Safety distance.
    pub delta_s: f64,
    /// Desired inter-robot distance (global minimum of the potential).
    pub delta_d: f64,
    /// Interaction range.
    pub range: f64,
    /// Force-per-length gain.
    pub k_c: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            delta_s: 5.0,
            delta_d: 15.0,
            range: 22.0,
            k_c: 1.0,
        }
    }
}

impl PotentialParams {
    pub fn new(delta_s: f64, delta_d: f64, range: f64, k_c: f64) -> Result<Self> {
        let p = Self {
            delta_s,
            delta_d,
            range,
            k_c,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 < self.delta_s && self.delta_s < self.delta_d && self.delta_d < self.range;
        if !ordered || !self.range.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "need 0 < delta_s < delta_d < R, got ({}, {}, {})",
                self.delta_s, self.delta_d, self.range
            )));
        }
        if !(self.k_c > 0.0 && self.k_c.is_finite()) {
            return Err(Error::InvalidPotential(format!("k_c must be positive, got {}", self.k_c)));
        }
        Ok(())
    }

    fn check_barrier(&self, d: f64) -> Result<()> {
        if d > self.delta_s {
            Ok(())
        } else {
            Err(Error::BarrierViolation {
                distance: d,
                delta_s: self.delta_s,
            })
        }
    }

    /// Value of the potential for every pair beyond the interaction range.
    pub fn plateau(&self) -> f64 {
        let span = self.range - self.delta_d;
        self.k_c * span * span / 6.0
    }
}

/// `V(d)`; non-negative, zero at `δd`, constant beyond `R`.
pub fn pair_potential(d: f64, p: &PotentialParams) -> Result<f64> {
    p.check_barrier(d)?;
    let v = if d <= p.delta_d {
        let gap = p.delta_d - p.delta_s;
        (d - p.delta_d) - gap * ((d - p.delta_s) / gap).ln()
    } else if d <= p.range {
        let span = p.range - p.delta_d;
        let u = d - p.delta_d;
        (span * u * u / 2.0 - u * u * u / 3.0) / span
    } else {
        return Ok(p.plateau());
    };
    // rounding can dip a hair below zero right at δd
    Ok((p.k_c * v).max(0.0))
}

/// `dV/dd`: negative (repulsive) below `δd`, positive (attractive) up to `R`,
/// zero beyond.
pub fn pair_force_magnitude(d: f64, p: &PotentialParams) -> Result<f64> {
    p.check_barrier(d)?;
    let f = if d <= p.delta_d {
        (d - p.delta_d) / (d - p.delta_s)
    } else if d <= p.range {
        (d - p.delta_d) * (p.range - d) / (p.range - p.delta_d)
    } else {
        0.0
    };
    Ok(p.k_c * f)
}

/// Scalar stiffness `κ` with `∇_{x_i} V = κ (x_i - x_j)`.
pub fn kappa(xi: &Vector3<f64>, xj: &Vector3<f64>, p: &PotentialParams) -> Result<f64> {
    let d = (xi - xj).norm();
    Ok(pair_force_magnitude(d, p)? / d)
}

/// Gradient of the pair potential with respect to `x_i`.
pub fn coupling_gradient(
    xi: &Vector3<f64>,
    xj: &Vector3<f64>,
    p: &PotentialParams,
) -> Result<Vector3<f64>> {
    Ok(kappa(xi, xj, p)? * (xi - xj))
}

/// A point obstacle that repels robots closer than `δd` using the repulsive
/// branch of the pair potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub position: Vector3<f64>,
    pub params: PotentialParams,
}

impl Obstacle {
    pub fn new(position: Vector3<f64>, params: PotentialParams) -> Self {
        Self { position, params }
    }

    /// Repulsive force on a robot at `x`; zero at distance `>= δd`.
    pub fn force(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        obstacle_force(x, self)
    }

    /// Stored repulsion energy for a robot at `x`.
    pub fn potential(&self, x: &Vector3<f64>) -> Result<f64> {
        let d = (x - self.position).norm();
        if d >= self.params.delta_d {
            self.params.check_barrier(d)?;
            return Ok(0.0);
        }
        pair_potential(d, &self.params)
    }
}

pub fn obstacle_force(x: &Vector3<f64>, obs: &Obstacle) -> Result<Vector3<f64>> {
    let offset = x - obs.position;
    let d = offset.norm();
    obs.params.check_barrier(d)?;
    if d >= obs.params.delta_d {
        return Ok(Vector3::zeros());
    }
    let f = pair_force_magnitude(d, &obs.params)?;
    Ok(-f / d * offset)
}
