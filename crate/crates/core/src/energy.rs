//! Energy accounting and numerical passivity certificates.
//!
//! Two storage functions are tracked along a run:
//!
//! * `H   = Σ K_i + g Σ V_k`, the energy of the unscaled swarm whose edges all
//!   carry the idle gain `g`;
//! * `H_s = Σ K_i + Σ α_k V_k`, the energy of the scaled swarm.
//!
//! The supplied energy `∫ (F^c + F^e)ᵀ v dτ` is integrated with the
//! trapezoidal rule. The unscaled certificate requires it to stay above
//! `-H(0)`, the scaled one above `-Σ K_i(0)`.

use nalgebra::Vector3;

use crate::dynamics::{DampingSpec, RobotState, ScalingState};
use crate::error::Result;
use crate::potentials::{pair_potential, PotentialParams};
use crate::topology::SwarmTopology;

/// Relative slack used when checking the continuous-time inequalities on a
/// sampled trajectory: `tol = PASSIVITY_RTOL (1 + |reference|)`.
pub const PASSIVITY_RTOL: f64 = 1e-6;

/// Everything the ledger needs to know about one sample.
pub struct LedgerInputs<'a> {
    pub state: &'a RobotState,
    pub scaling: &'a ScalingState,
    pub damping: &'a DampingSpec,
    pub topology: &'a SwarmTopology,
    pub potential: &'a PotentialParams,
    /// `F^c_i + F^e_i` for every robot.
    pub port_forces: &'a [Vector3<f64>],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerSample {
    pub time: f64,
    pub kinetic_sum: f64,
    pub potential_sum: f64,
    pub h: f64,
    pub h_s: f64,
    pub supplied: f64,
    /// `(F^c + F^e)ᵀ v` at this sample.
    pub supply_power: f64,
    /// `vᵀ B̲ v` at this sample.
    pub dissipation_power: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub scaling_epoch: u64,
    /// Bumped whenever a pair enters or leaves damping range.
    pub damping_epoch: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub kinetic: Vec<f64>,
    pub potential_edges: Vec<f64>,
    pub h: f64,
    pub h_s: f64,
    pub supplied_integral: f64,
    pub initial_kinetic_sum: f64,
    pub initial_h: f64,
    /// Gain applied to `Σ V_k` in `H`.
    pub base_gain: f64,
    pub history: Vec<LedgerSample>,
    damped_pairs: Vec<bool>,
    damping_epoch: u64,
}

impl EnergyLedger {
    pub fn new(base_gain: f64) -> Self {
        Self {
            kinetic: Vec::new(),
            potential_edges: Vec::new(),
            h: 0.0,
            h_s: 0.0,
            supplied_integral: 0.0,
            initial_kinetic_sum: 0.0,
            initial_h: 0.0,
            base_gain,
            history: Vec::new(),
            damped_pairs: Vec::new(),
            damping_epoch: 0,
        }
    }

    /// Build a ledger directly from samples, e.g. for replaying a log.
    pub fn from_history(base_gain: f64, history: Vec<LedgerSample>) -> Self {
        let mut ledger = Self::new(base_gain);
        if let (Some(first), Some(last)) = (history.first(), history.last()) {
            ledger.initial_h = first.h;
            ledger.initial_kinetic_sum = first.kinetic_sum;
            ledger.h = last.h;
            ledger.h_s = last.h_s;
            ledger.supplied_integral = last.supplied;
        }
        ledger.history = history;
        ledger
    }

    pub fn margin_nominal(&self) -> f64 {
        self.supplied_integral + self.initial_h
    }

    pub fn margin_scaled(&self) -> f64 {
        self.supplied_integral + self.initial_kinetic_sum
    }

    /// Recompute the energies at a new sample and advance the supplied-power
    /// integral. `dt` is the time since the previous sample.
    pub fn update(&mut self, inputs: &LedgerInputs<'_>, dt: f64) -> Result<()> {
        let state = inputs.state;
        let n = state.n_robots();
        self.kinetic.clear();
        self.kinetic.extend((0..n).map(|i| state.kinetic_energy(i)));
        self.potential_edges.clear();
        for &(i, j) in inputs.topology.edges() {
            let d = (state.positions[i] - state.positions[j]).norm();
            self.potential_edges.push(pair_potential(d, inputs.potential)?);
        }

        let kinetic_sum: f64 = self.kinetic.iter().sum();
        let potential_sum: f64 = self.potential_edges.iter().sum();
        let scaled_potential: f64 = self
            .potential_edges
            .iter()
            .zip(&inputs.scaling.alpha_edges)
            .map(|(v, a)| a * v)
            .sum();
        self.h = kinetic_sum + self.base_gain * potential_sum;
        self.h_s = kinetic_sum + scaled_potential;

        let velocities = state.velocities();
        let supply_power: f64 = inputs
            .port_forces
            .iter()
            .zip(&velocities)
            .map(|(f, v)| f.dot(v))
            .sum();
        let dissipation_power = dissipation(inputs, &velocities);
        let damped = inputs.damping.beta_edges.iter().map(|&b| b != 0.0);
        if !self.damped_pairs.iter().copied().eq(damped.clone()) {
            if !self.damped_pairs.is_empty() {
                self.damping_epoch += 1;
            }
            self.damped_pairs.clear();
            self.damped_pairs.extend(damped);
        }

        match self.history.last() {
            None => {
                self.initial_h = self.h;
                self.initial_kinetic_sum = kinetic_sum;
                self.supplied_integral = 0.0;
            }
            Some(prev) => {
                self.supplied_integral += 0.5 * dt * (prev.supply_power + supply_power);
            }
        }

        let (alpha_min, alpha_max) = inputs.scaling.alpha_range();
        self.history.push(LedgerSample {
            time: state.time,
            kinetic_sum,
            potential_sum,
            h: self.h,
            h_s: self.h_s,
            supplied: self.supplied_integral,
            supply_power,
            dissipation_power,
            alpha_min,
            alpha_max,
            scaling_epoch: inputs.scaling.epoch,
            damping_epoch: self.damping_epoch,
        });
        Ok(())
    }
}

fn dissipation(inputs: &LedgerInputs<'_>, velocities: &[Vector3<f64>]) -> f64 {
    let local: f64 = velocities
        .iter()
        .zip(&inputs.state.local_damping)
        .map(|(v, b)| b * v.norm_squared())
        .sum();
    let coupling: f64 = inputs
        .topology
        .edges()
        .iter()
        .enumerate()
        .filter(|(k, _)| inputs.damping.beta_edges[*k] != 0.0)
        .map(|(k, &(i, j))| {
            inputs.scaling.c_edges[k] * inputs.damping.beta_edges[k] * (velocities[i] - velocities[j]).norm_squared()
        })
        .sum();
    local + coupling
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertificateStatus {
    Pass,
    Fail,
    /// Some recorded `α_k` left the certified interval; the inequality was
    /// still evaluated but carries no guarantee.
    PreconditionViolated { time: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassivityReport {
    pub status: CertificateStatus,
    /// Smallest `supplied + reference` over the run.
    pub worst_margin: f64,
    pub worst_time: f64,
    pub tolerance: f64,
}

impl PassivityReport {
    pub fn passed(&self) -> bool {
        self.status == CertificateStatus::Pass
    }
}

fn worst_margin(history: &[LedgerSample], reference: f64) -> (f64, f64) {
    history
        .iter()
        .map(|s| (s.supplied + reference, s.time))
        .fold((f64::INFINITY, 0.0), |acc, m| if m.0 < acc.0 { m } else { acc })
}

/// `∫ (F^c+F^e)ᵀ v ≥ -H(0)` at every recorded time.
pub fn check_passivity_nominal(ledger: &EnergyLedger) -> PassivityReport {
    let reference = ledger.initial_h;
    let tolerance = PASSIVITY_RTOL * (1.0 + reference.abs());
    let (worst, at) = worst_margin(&ledger.history, reference);
    let status = if ledger.history.is_empty() || worst >= -tolerance {
        CertificateStatus::Pass
    } else {
        CertificateStatus::Fail
    };
    PassivityReport {
        status,
        worst_margin: worst,
        worst_time: at,
        tolerance,
    }
}

/// `∫ (F^c+F^e)ᵀ v ≥ -Σ K_i(0)` at every recorded time, valid when every
/// `α_k` stayed inside `bounds`.
pub fn check_passivity_scaled(ledger: &EnergyLedger, bounds: (f64, f64)) -> PassivityReport {
    let reference = ledger.initial_kinetic_sum;
    let tolerance = PASSIVITY_RTOL * (1.0 + reference.abs());
    let (worst, at) = worst_margin(&ledger.history, reference);
    let (lo, hi) = bounds;
    let violation = if !(0.0 < lo && lo < hi) {
        Some((0.0, lo))
    } else {
        ledger.history.iter().find_map(|s| {
            if s.alpha_min < lo {
                Some((s.time, s.alpha_min))
            } else if s.alpha_max > hi {
                Some((s.time, s.alpha_max))
            } else {
                None
            }
        })
    };
    let status = match violation {
        Some((time, alpha)) => CertificateStatus::PreconditionViolated { time, alpha },
        None if ledger.history.is_empty() || worst >= -tolerance => CertificateStatus::Pass,
        None => CertificateStatus::Fail,
    };
    PassivityReport {
        status,
        worst_margin: worst,
        worst_time: at,
        tolerance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub time: f64,
    pub value: f64,
}

/// Discrete power-balance residual
/// `ΔH_s/dt - [(F^c+F^e)ᵀv - vᵀB̲v]` between consecutive samples, using the
/// trapezoidal average of the right-hand side. Steps across which the edge
/// scales or the set of damped pairs changed are skipped: the dissipation
/// jumps there and the trapezoid misses it by half the jump.
pub fn energy_balance_residual(history: &[LedgerSample], dt: f64) -> Vec<Residual> {
    history
        .windows(2)
        .filter(|w| w[0].scaling_epoch == w[1].scaling_epoch && w[0].damping_epoch == w[1].damping_epoch)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let rhs = 0.5 * ((a.supply_power - a.dissipation_power) + (b.supply_power - b.dissipation_power));
            Residual {
                time: a.time,
                value: (b.h_s - a.h_s) / dt - rhs,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(time: f64, h: f64, kinetic_sum: f64, supplied: f64) -> LedgerSample {
        LedgerSample {
            time,
            kinetic_sum,
            potential_sum: h - kinetic_sum,
            h,
            h_s: h,
            supplied,
            supply_power: 0.0,
            dissipation_power: 0.0,
            alpha_min: 1.0,
            alpha_max: 1.0,
            scaling_epoch: 0,
            damping_epoch: 0,
        }
    }

    fn ledger_for(positions: Vec<Vector3<f64>>, momenta: Vec<Vector3<f64>>) -> EnergyLedger {
        let n = positions.len();
        let topology = SwarmTopology::new(n).unwrap();
        let mut state = RobotState::at_rest(positions, vec![1.0; n], vec![1.0; n]).unwrap();
        state.momenta = momenta;
        let scaling = ScalingState::identity(topology.n_edges(), 1.0, (1e-4, 1e2));
        let potential = PotentialParams::default();
        let damping = DampingSpec::uniform(&topology, &state.positions, 1.0, potential.range);
        let mut ledger = EnergyLedger::new(1.0);
        let port = vec![Vector3::zeros(); n];
        ledger
            .update(
                &LedgerInputs {
                    state: &state,
                    scaling: &scaling,
                    damping: &damping,
                    topology: &topology,
                    potential: &potential,
                    port_forces: &port,
                },
                1e-3,
            )
            .unwrap();
        ledger
    }

    #[test]
    fn lattice_at_rest_has_zero_energy() {
        let ledger = ledger_for(
            vec![Vector3::zeros(), Vector3::new(15.0, 0.0, 0.0)],
            vec![Vector3::zeros(); 2],
        );
        assert_eq!(ledger.h, 0.0);
        assert_eq!(ledger.h_s, 0.0);
    }

    #[test]
    fn kinetic_only() {
        // second robot sits exactly at δd so the single pair stores nothing
        let ledger = ledger_for(
            vec![Vector3::zeros(), Vector3::new(0.0, 15.0, 0.0)],
            vec![Vector3::new(2.0, 0.0, 0.0), Vector3::zeros()],
        );
        assert_eq!(ledger.kinetic[0], 2.0);
        assert_eq!(ledger.h, 2.0);
    }

    #[test]
    fn synthetic_violation_fails_with_margin() {
        let h0 = 10.0;
        let ledger = EnergyLedger::from_history(
            1.0,
            vec![sample(0.0, h0, 0.0, 0.0), sample(1.0, 2.0, 0.0, -h0 - 1.0)],
        );
        let report = check_passivity_nominal(&ledger);
        assert_eq!(report.status, CertificateStatus::Fail);
        assert!((report.worst_margin + 1.0).abs() < 1e-12);
        assert_eq!(report.worst_time, 1.0);
    }

    #[test]
    fn zero_input_passes() {
        let ledger = EnergyLedger::from_history(1.0, vec![sample(0.0, 3.0, 0.0, 0.0), sample(1.0, 1.0, 0.0, 0.0)]);
        assert!(check_passivity_nominal(&ledger).passed());
        assert!(check_passivity_scaled(&ledger, (1e-4, 1e2)).passed());
    }

    #[test]
    fn out_of_bounds_alpha_voids_certificate() {
        let mut s = sample(0.0, 1.0, 0.0, 0.0);
        s.alpha_max = 200.0;
        let ledger = EnergyLedger::from_history(1.0, vec![s]);
        assert!(matches!(
            check_passivity_scaled(&ledger, (1e-4, 1e2)).status,
            CertificateStatus::PreconditionViolated { alpha, .. } if alpha == 200.0
        ));
        // unscaled edges at 1 must sit inside the interval too
        let ledger = EnergyLedger::from_history(1.0, vec![sample(0.0, 1.0, 0.0, 0.0)]);
        assert!(matches!(
            check_passivity_scaled(&ledger, (2.0, 5.0)).status,
            CertificateStatus::PreconditionViolated { .. }
        ));
    }

    #[test]
    fn static_residual_is_zero() {
        let hist = vec![sample(0.0, 4.0, 0.0, 0.0), sample(0.1, 4.0, 0.0, 0.0)];
        let r = energy_balance_residual(&hist, 0.1);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].value, 0.0);
    }
}
