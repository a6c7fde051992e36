//! Scenario configuration, initial conditions, batch execution and metrics.

pub mod config;
pub mod experiment;
pub mod init;
pub mod metrics;
pub mod scenario;

pub use config::{load_scenario, parse_scenario, render_scenario};
pub use experiment::{run_batch, run_experiment, run_scenario, BatchJob, ExperimentError, Overrides, RunSummary};
pub use init::generate_initial;
pub use metrics::{barycenter_deviation, contact_windows, metrics_rows, write_csv, MetricsRow};
pub use scenario::{InitSpec, Mode, ObstaclePlacement, Scenario};
