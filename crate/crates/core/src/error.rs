use thiserror::Error;

use crate::dynamics::RobotState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("a swarm needs at least two robots, got {0}")]
    InvalidTopology(usize),

    #[error("invalid robot pair ({i}, {j}) for {n} robots")]
    InvalidPair { i: usize, j: usize, n: usize },

    #[error("edge {edge} has invalid weight {weight}")]
    InvalidWeight { edge: usize, weight: f64 },

    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid potential parameters: {0}")]
    InvalidPotential(String),

    #[error("distance {distance} is inside the safety barrier {delta_s}")]
    BarrierViolation { distance: f64, delta_s: f64 },

    #[error("non-finite force on robot {robot}")]
    NumericBlowup { robot: usize },

    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),

    #[error("scale {alpha} outside [{min}, {max}]")]
    AlphaOutOfBounds { alpha: f64, min: f64, max: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("could not place robot {robot} after {attempts} attempts")]
    InfeasibleDensity { robot: usize, attempts: usize },

    #[error("trajectories are not on the same time grid: {0}")]
    GridMismatch(String),

    #[error("simulation aborted at step {step} (t = {time}): {source}")]
    Aborted {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
        /// State at the start of the failing step.
        snapshot: Box<RobotState>,
    },

    #[error("config error: {0}")]
    Config(String),
}
