use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;

use crate::energy::{check_passivity_nominal, check_passivity_scaled, CertificateStatus, PassivityReport};
use crate::error::{Error, Result};
use crate::harness::config::{load_scenario, render_scenario};
use crate::harness::init::generate_initial;
use crate::harness::metrics::{metrics_rows, write_csv};
use crate::harness::scenario::{Mode, Scenario};
use crate::simulation::{simulate_with_options, SimOptions, Trajectory};

/// Environment variable capping the worker threads of [`run_batch`].
pub const THREADS_ENV: &str = "SWARM_SIM_THREADS";

/// Process exit codes of the experiment runner.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const PHYSICS: i32 = 3;
    pub const PASSIVITY: i32 = 4;
}

/// Both certificates for one run, plus the headline numbers.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub samples: usize,
    pub nominal: PassivityReport,
    pub scaled: PassivityReport,
    pub min_pair_distance: f64,
    pub min_obstacle_distance: f64,
    pub peak_cost: Option<f64>,
    pub contact_steps: usize,
    pub multi_contact_steps: usize,
    pub controller_updates: usize,
    pub broadcasts: usize,
    pub degenerate_updates: usize,
}

impl RunSummary {
    pub fn new(traj: &Trajectory, seed: u64) -> Self {
        let peak_cost = traj.records.iter().filter_map(|r| r.cost).reduce(f64::max);
        Self {
            mode: traj.mode,
            seed,
            samples: traj.records.len(),
            nominal: check_passivity_nominal(&traj.ledger),
            scaled: check_passivity_scaled(&traj.ledger, traj.alpha_bounds),
            min_pair_distance: traj.stats.min_pair_distance,
            min_obstacle_distance: traj.stats.min_obstacle_distance,
            peak_cost,
            contact_steps: traj.stats.contact_steps,
            multi_contact_steps: traj.stats.multi_contact_steps,
            controller_updates: traj.stats.controller_updates,
            broadcasts: traj.stats.broadcasts,
            degenerate_updates: traj.stats.degenerate_updates,
        }
    }

    /// A failed scaled certificate on an in-bounds run is fatal, and so is a
    /// failed unscaled certificate in nominal mode.
    pub fn certificate_failed(&self) -> bool {
        self.scaled.status == CertificateStatus::Fail
            || (self.mode == Some(Mode::Nominal) && self.nominal.status == CertificateStatus::Fail)
    }

    pub fn render(&self) -> String {
        let verdict = |r: &PassivityReport| match r.status {
            CertificateStatus::Pass => "PASS".to_owned(),
            CertificateStatus::Fail => "FAIL".to_owned(),
            CertificateStatus::PreconditionViolated { time, alpha } => {
                format!("NOT APPLICABLE (alpha = {alpha} at t = {time})")
            }
        };
        let mut s = String::new();
        let mode = self.mode.map_or("custom", |m| m.as_str());
        let _ = writeln!(s, "mode: {mode}");
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "samples: {}", self.samples);
        for (name, r) in [("unscaled", &self.nominal), ("scaled", &self.scaled)] {
            let _ = writeln!(
                s,
                "passivity {name}: {} (worst margin {:?} at t = {:?}, tolerance {:?})",
                verdict(r),
                r.worst_margin,
                r.worst_time,
                r.tolerance
            );
        }
        let _ = writeln!(s, "min pair distance: {:?}", self.min_pair_distance);
        let _ = writeln!(s, "min obstacle distance: {:?}", self.min_obstacle_distance);
        match self.peak_cost {
            Some(c) => {
                let _ = writeln!(s, "peak cost: {c:?}");
            }
            None => {
                let _ = writeln!(s, "peak cost: none (no contact)");
            }
        }
        let _ = writeln!(s, "contact steps: {}", self.contact_steps);
        let _ = writeln!(s, "multi-contact steps: {}", self.multi_contact_steps);
        let _ = writeln!(s, "controller updates: {}", self.controller_updates);
        let _ = writeln!(s, "broadcast messages: {}", self.broadcasts);
        let _ = writeln!(s, "degenerate updates: {}", self.degenerate_updates);
        s
    }
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub full_state: bool,
}

impl Overrides {
    pub fn apply(&self, scenario: &mut Scenario) -> Result<()> {
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        if let Some(dt) = self.dt {
            // keep T̄ on the same number of steps
            let ratio = scenario.t_bar / scenario.dt;
            scenario.dt = dt;
            scenario.t_bar = ratio * dt;
        }
        if let Some(steps) = self.steps {
            scenario.horizon = steps as f64 * scenario.dt;
        }
        scenario.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug)]
pub enum ExperimentError {
    Config(Error),
    Physics(Error),
    Passivity(Box<RunSummary>),
    Io(PathBuf, std::io::Error),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => exit_code::CONFIG,
            ExperimentError::Physics(_) => exit_code::PHYSICS,
            ExperimentError::Passivity(_) => exit_code::PASSIVITY,
            ExperimentError::Io(..) => exit_code::IO,
        }
    }
}

impl std::fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentError::Config(e) => write!(f, "{e}"),
            ExperimentError::Physics(e) => write!(f, "physics abort: {e}"),
            ExperimentError::Passivity(s) => write!(f, "passivity certificate failed\n{}", s.render()),
            ExperimentError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl std::error::Error for ExperimentError {}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub metrics: PathBuf,
    pub summary: PathBuf,
    pub config_echo: PathBuf,
    pub run: RunSummary,
}

/// Generate the initial swarm from the scenario seed and simulate.
pub fn run_scenario(scenario: &Scenario, mode: Mode, options: SimOptions) -> Result<Trajectory> {
    let initial = generate_initial(scenario.seed, scenario)?;
    simulate_with_options(&initial, scenario, mode, options)
}

/// Load a scenario file, run it in `mode`, and write `metrics.csv`,
/// `summary.txt` and `config.toml` into `out_dir`.
pub fn run_experiment(
    config: &Path,
    mode: Mode,
    out_dir: &Path,
    overrides: &Overrides,
) -> std::result::Result<Artifacts, ExperimentError> {
    let mut scenario = load_scenario(config).map_err(ExperimentError::Config)?;
    overrides.apply(&mut scenario).map_err(ExperimentError::Config)?;
    run_loaded(&scenario, mode, out_dir, overrides.full_state)
}

pub fn run_loaded(
    scenario: &Scenario,
    mode: Mode,
    out_dir: &Path,
    full_state: bool,
) -> std::result::Result<Artifacts, ExperimentError> {
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |e| ExperimentError::Io(p, e)
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let config_echo = out_dir.join("config.toml");
    fs::write(&config_echo, render_scenario(scenario)).map_err(io_err(&config_echo))?;

    let options = SimOptions {
        record_states: full_state,
        record_forces: false,
    };
    info!("running {} robots in {mode} mode for {} s", scenario.n_robots, scenario.horizon);
    let traj = run_scenario(scenario, mode, options).map_err(|e| match e {
        Error::InfeasibleDensity { .. } | Error::InvalidScenario(_) | Error::Config(_) => ExperimentError::Config(e),
        other => ExperimentError::Physics(other),
    })?;

    let metrics = out_dir.join("metrics.csv");
    let file = fs::File::create(&metrics).map_err(io_err(&metrics))?;
    let mut w = BufWriter::new(file);
    write_csv(&mut w, &metrics_rows(&traj), full_state).map_err(io_err(&metrics))?;

    let run = RunSummary::new(&traj, scenario.seed);
    let summary = out_dir.join("summary.txt");
    fs::write(&summary, run.render()).map_err(io_err(&summary))?;
    if run.certificate_failed() {
        return Err(ExperimentError::Passivity(Box::new(run)));
    }
    Ok(Artifacts {
        metrics,
        summary,
        config_echo,
        run,
    })
}

/// Worker count for batch runs: `SWARM_SIM_THREADS` if set, otherwise all
/// cores.
pub fn batch_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone)]
pub struct BatchJob {
    pub scenario: Scenario,
    pub mode: Mode,
}

/// Run independent jobs in parallel; results come back in job order.
pub fn run_batch(jobs: &[BatchJob], options: SimOptions) -> Vec<Result<Trajectory>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(batch_threads())
        .build()
        .expect("thread pool");
    pool.install(|| {
        jobs.par_iter()
            .map(|job| run_scenario(&job.scenario, job.mode, options))
            .collect()
    })
}
