//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.
//!
//! cargo test --release --test acceptance

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swarm_impedance::controller::{cost, solve_alpha, RandomAlphaSchedule, GAMMA_FLOOR};
use swarm_impedance::dynamics::{step, RobotState, SwarmModel};
use swarm_impedance::energy::{check_passivity_nominal, check_passivity_scaled, CertificateStatus};
use swarm_impedance::harness::{
    barycenter_deviation, contact_windows, generate_initial, Mode, ObstaclePlacement, Scenario,
};
use swarm_impedance::potentials::{coupling_gradient, kappa, pair_potential, PotentialParams};
use swarm_impedance::simulation::{simulate, simulate_with, SimOptions, Trajectory};
use swarm_impedance::topology::SwarmTopology;

/// Seed of the representative sixteen-robot comparison run: among seeds
/// 0 to 11 with the default obstacle placement it reaches the obstacle
/// earliest in constant-gain mode (7.46 s), leaving the longest contact
/// window in the ten seconds.
const SHOWCASE_SEED: u64 = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Every completed run feeds the barrier check of criterion 8.
#[derive(Default)]
struct BarrierLog {
    runs: usize,
    aborted: Vec<String>,
    min_distance: f64,
}

impl BarrierLog {
    fn record(&mut self, traj: &Trajectory) {
        if self.runs == 0 {
            self.min_distance = f64::INFINITY;
        }
        self.runs += 1;
        self.min_distance = self
            .min_distance
            .min(traj.stats.min_pair_distance)
            .min(traj.stats.min_obstacle_distance);
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Batch scenario: the obstacle starts just out of every robot's reach, so
/// the moving swarm runs into it within the five seconds in most runs.
fn batch_scenario(index: u64) -> Scenario {
    let n = [4, 8, 16][index as usize % 3];
    let mut s = Scenario::reference(n).with_seed(1000 + index).with_horizon(5.0);
    s.obstacle = Some(ObstaclePlacement::OutOfReach { clearance: 1.0 });
    s
}

fn criterion_1(log: &mut BarrierLog) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut contact_runs = 0;
    for index in 0..50 {
        let s = batch_scenario(index);
        let result = generate_initial(s.seed, &s).and_then(|x0| simulate(&x0, &s, Mode::Nominal));
        match result {
            Ok(traj) => {
                log.record(&traj);
                let report = check_passivity_nominal(&traj.ledger);
                contact_runs += usize::from(traj.stats.contact_steps > 0);
                if !report.passed() {
                    failures.push(format!("seed {} margin {:e}", s.seed, report.worst_margin));
                }
            }
            Err(e) => {
                log.aborted.push(format!("nominal seed {}", s.seed));
                failures.push(format!("seed {}: {e}", s.seed));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        failures.is_empty() && secs < 120.0,
        format!(
            "50 nominal runs, {contact_runs} with contact, {} failures {failures:?}, {secs:.1} s",
            failures.len()
        ),
    )
}

fn criterion_2(log: &mut BarrierLog) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut contact_runs = 0;
    let mut adversarial_updates = 0;
    for index in 0..50 {
        let s = batch_scenario(index);
        let adversarial = index % 2 == 1;
        let result = generate_initial(s.seed, &s).and_then(|x0| {
            if adversarial {
                let mut policy = RandomAlphaSchedule::new(s.seed, s.t_bar, s.dt, s.idle_gain(Mode::Tunable));
                simulate_with(&x0, &s, &mut policy, SimOptions::default())
            } else {
                simulate(&x0, &s, Mode::Tunable)
            }
        });
        let label = if adversarial { "adversarial" } else { "controller" };
        match result {
            Ok(traj) => {
                log.record(&traj);
                if adversarial {
                    adversarial_updates += traj.stats.controller_updates;
                }
                contact_runs += usize::from(traj.stats.contact_steps > 0);
                let report = check_passivity_scaled(&traj.ledger, s.alpha_bounds);
                if report.status != CertificateStatus::Pass {
                    failures.push(format!("{label} seed {}: {:?} margin {:e}", s.seed, report.status, report.worst_margin));
                }
            }
            Err(e) => {
                log.aborted.push(format!("{label} seed {}", s.seed));
                failures.push(format!("{label} seed {}: {e}", s.seed));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        failures.is_empty() && secs < 180.0,
        format!(
            "25 controller + 25 adversarial runs ({adversarial_updates} random rescalings), {contact_runs} with contact, {} failures {failures:?}, {secs:.1} s",
            failures.len()
        ),
    )
}

/// Brute-force argmin of the cost on a 1e-6 grid: a 1e-2 sweep of the whole
/// interval, then the fine grid around the best coarse point. The cost is a
/// convex quadratic in `α`, so the global grid minimum lies in that bracket.
fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let sweep = |a: f64, b: f64, h: f64| {
        let n = ((b - a) / h).floor() as usize;
        let mut best = (f(a), a);
        for k in 0..=n {
            let x = (a + k as f64 * h).min(b);
            let v = f(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        let v = f(b);
        if v < best.0 {
            best = (v, b);
        }
        best.1
    };
    let coarse = sweep(lo, hi, 1e-2);
    sweep((coarse - 1e-2).max(lo), (coarse + 1e-2).min(hi), 1e-6)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bounds = (1e-4, 1e2);
    let (mut interior, mut clamped, mut worst_gap, mut worst_kkt) = (0, 0, 0.0f64, 0.0f64);
    let mut failures = 0;
    for _ in 0..1000 {
        let xi = Vector3::from_fn(|_, _| rng.gen_range(-30.0..30.0));
        let elastic = loop {
            let s = Vector3::from_fn(|_, _| rng.gen_range(-10.0..10.0));
            if s.norm() > 0.5 {
                break s;
            }
        };
        // half the instances have the desired spring aligned with S, so the
        // optimum is usually interior; the rest are arbitrary
        let kappa_d = rng.gen_range(0.1..5.0);
        let rest = if rng.gen_bool(0.5) {
            xi - rng.gen_range(0.1..20.0) * elastic.normalize()
        } else {
            xi + Vector3::from_fn(|_, _| rng.gen_range(-20.0..20.0))
        };
        let sol = solve_alpha(&xi, &rest, kappa_d, &elastic, bounds).unwrap();
        let f = |a: f64| cost(a, &xi, &rest, kappa_d, &elastic);
        let grid = grid_argmin(f, bounds.0, bounds.1);
        let gap = (sol.alpha - grid).abs();
        worst_gap = worst_gap.max(gap);
        let mut ok = gap <= 1e-6 + 1e-12 * sol.alpha.abs() || f(sol.alpha) <= f(grid);
        if sol.is_interior() {
            interior += 1;
            let target = kappa_d * (xi - rest);
            let slope = 2.0 * (sol.alpha * elastic.norm_squared() - target.dot(&elastic));
            let scale = 2.0 * target.norm() * elastic.norm();
            let kkt = slope.abs() / scale;
            worst_kkt = worst_kkt.max(kkt);
            ok &= kkt <= 1e-9;
        } else {
            clamped += 1;
        }
        failures += usize::from(!ok);
    }
    Outcome::new(
        failures == 0,
        format!(
            "1000 instances ({interior} interior, {clamped} at a bound), max |α* - grid| = {worst_gap:.1e}, max relative slope = {worst_kkt:.1e}, {failures} failures"
        ),
    )
}

struct Showcase {
    scenario: Scenario,
    nominal: Trajectory,
    tunable: Trajectory,
    from_nominal: Trajectory,
}

fn showcase(log: &mut BarrierLog) -> Result<Showcase, String> {
    let scenario = Scenario::reference(16).with_seed(SHOWCASE_SEED);
    let x0 = generate_initial(scenario.seed, &scenario).map_err(|e| e.to_string())?;
    let mut run = |mode: Mode| {
        simulate(&x0, &scenario, mode)
            .inspect(|t| log.record(t))
            .map_err(|e| {
                log.aborted.push(format!("showcase {mode}"));
                format!("{mode}: {e}")
            })
    };
    let nominal = run(Mode::Nominal)?;
    let tunable = run(Mode::Tunable)?;
    let from_nominal = run(Mode::TunableFromNominal)?;
    Ok(Showcase {
        scenario,
        nominal,
        tunable,
        from_nominal,
    })
}

fn criterion_4(sc: &Showcase) -> Outcome {
    let imp = sc.scenario.impedance;
    let target = imp.kappa_d * imp.rest_length;
    let (mut elastic_checked, mut viscous_checked) = (0, 0);
    let (mut worst_k, mut worst_b) = (0.0f64, 0.0f64);
    for traj in [&sc.tunable, &sc.from_nominal] {
        for ev in &traj.events {
            if let Some(sol) = ev.alpha_solution.filter(|s| s.is_interior()) {
                elastic_checked += 1;
                worst_k = worst_k.max((sol.alpha * ev.elastic_norm - target).abs() / target);
            }
            if let Some(g) = ev.gamma_computed.filter(|&g| g > GAMMA_FLOOR) {
                viscous_checked += 1;
                let beta_n = g * ev.viscous_norm / imp.velocity_offset;
                worst_b = worst_b.max((beta_n - imp.beta_d).abs() / imp.beta_d);
            }
        }
    }
    Outcome::new(
        elastic_checked > 0 && viscous_checked > 0 && worst_k <= 1e-9 && worst_b <= 1e-12,
        format!(
            "{elastic_checked} interior updates, max |α*|S| - κdΔ| / κdΔ = {worst_k:.1e}; {viscous_checked} damping updates, max |β_n - β_d| / β_d = {worst_b:.1e}"
        ),
    )
}

fn contact_costs(traj: &Trajectory) -> Vec<f64> {
    traj.records.iter().filter_map(|r| r.cost).collect()
}

fn criterion_5(sc: &Showcase) -> Outcome {
    let (nominal, tunable) = (contact_costs(&sc.nominal), contact_costs(&sc.tunable));
    if nominal.is_empty() || tunable.is_empty() {
        return Outcome::new(
            false,
            format!("no contact: {} nominal, {} tunable samples", nominal.len(), tunable.len()),
        );
    }
    let (n_len, t_len) = (nominal.len(), tunable.len());
    let (mn, mt) = (median(nominal), median(tunable));
    Outcome::new(
        mt <= 1e-3 * mn,
        format!("median f: tunable {mt:.3e} ({t_len} samples) vs nominal {mn:.3e} ({n_len} samples), ratio {:.1e}", mt / mn),
    )
}

fn criterion_6(sc: &Showcase) -> Outcome {
    let dev = match barycenter_deviation(&sc.from_nominal, &sc.nominal) {
        Ok(d) => d,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let mut windows = contact_windows(&sc.nominal);
    windows.extend(contact_windows(&sc.from_nominal));
    let Some(first_contact) = windows.iter().map(|w| w.0).reduce(f64::min) else {
        return Outcome::new(false, "no contact in either run");
    };
    let dx: Vec<f64> = dev.iter().map(|d| d[0].abs()).collect();
    let med = median(dx.clone());
    let times: Vec<f64> = sc.nominal.times().collect();
    let near_contact = |t: f64| windows.iter().any(|&(a, b)| t >= a - 0.5 && t <= b + 0.5);
    let stray = times
        .iter()
        .zip(&dx)
        .filter(|&(&t, &d)| d > 10.0 * med && !near_contact(t))
        .count();
    let pre_contact = times
        .iter()
        .zip(&dx)
        .filter(|&(&t, _)| t < first_contact)
        .map(|(_, &d)| d)
        .fold(0.0, f64::max);
    let peak = dx.iter().copied().fold(0.0, f64::max);
    Outcome::new(
        stray == 0 && pre_contact < 1e-4 && first_contact > 0.0,
        format!(
            "first contact {first_contact:.2} s, pre-contact max {pre_contact:.1e} %, median {med:.1e} %, peak {peak:.2e} %, {stray} samples above 10x median outside contact +/- 0.5 s"
        ),
    )
}

/// Sampling cube for the 64-robot run. In the default cube of side 60 the
/// stiff swarm contracts from a front 30 ahead of its barycenter to about
/// 11.5 and never reaches an obstacle placed out of reach.
const N64_BOX_SIDE: f64 = 36.0;

fn criterion_7(log: &mut BarrierLog) -> Outcome {
    let mut s = Scenario::reference(64);
    s.init.box_side = Some(N64_BOX_SIDE);
    s.obstacle = Some(ObstaclePlacement::OutOfReach { clearance: 1.0 });
    let x0 = match generate_initial(s.seed, &s) {
        Ok(x) => x,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let mut parts = Vec::new();
    let mut pass = true;
    for mode in [Mode::Nominal, Mode::Tunable] {
        let start = Instant::now();
        match simulate(&x0, &s, mode) {
            Ok(traj) => {
                let secs = start.elapsed().as_secs_f64();
                log.record(&traj);
                let p1 = check_passivity_nominal(&traj.ledger);
                let p2 = check_passivity_scaled(&traj.ledger, s.alpha_bounds);
                let verdict_ok = match mode {
                    Mode::Nominal => p1.passed(),
                    _ => p2.status == CertificateStatus::Pass,
                };
                pass &= verdict_ok && secs < 300.0;
                parts.push(format!(
                    "{mode}: {secs:.1} s, {} contact steps, certificate {}",
                    traj.stats.contact_steps,
                    if verdict_ok { "pass" } else { "FAIL" }
                ));
            }
            Err(e) => {
                log.aborted.push(format!("N=64 {mode}"));
                pass = false;
                parts.push(format!("{mode}: {e}"));
            }
        }
    }
    Outcome::new(pass, format!("64 robots, 2016 edges, 10 s: {}", parts.join("; ")))
}

/// Unscaled input model written out robot by robot, independent of the
/// library's edge loop.
fn reference_forces(state: &RobotState, model: &SwarmModel) -> Vec<Vector3<f64>> {
    let n = state.n_robots();
    let v = state.velocities();
    let p = &model.potential;
    (0..n)
        .map(|i| {
            let mut elastic = Vector3::zeros();
            let mut viscous = Vector3::zeros();
            for j in (0..n).filter(|&j| j != i) {
                let d = (state.positions[i] - state.positions[j]).norm();
                if d <= p.range {
                    elastic -= kappa(&state.positions[i], &state.positions[j], p).unwrap()
                        * (state.positions[i] - state.positions[j]);
                    viscous -= model.beta * (v[i] - v[j]);
                }
            }
            let env = model.obstacle.map_or(Vector3::zeros(), |o| o.force(&state.positions[i]).unwrap());
            elastic + viscous + model.drive + (-state.local_damping[i] * v[i]) + env
        })
        .collect()
}

fn criterion_8(log: &BarrierLog) -> Outcome {
    let p = PotentialParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // gradient against central differences of V(|xi - xj|)
    let mut worst_fd = 0.0f64;
    let mut pairs = 0;
    while pairs < 1000 {
        let xi = Vector3::from_fn(|_, _| rng.gen_range(-15.0..15.0));
        let xj = Vector3::from_fn(|_, _| rng.gen_range(-15.0..15.0));
        let d = (xi - xj).norm();
        if !(d > p.delta_s + 0.05 && d < p.range - 0.01) {
            continue;
        }
        pairs += 1;
        let grad = coupling_gradient(&xi, &xj, &p).unwrap();
        let h = 1e-6;
        let fd = Vector3::from_fn(|a, _| {
            let (mut up, mut down) = (xi, xi);
            up[a] += h;
            down[a] -= h;
            (pair_potential((up - xj).norm(), &p).unwrap() - pair_potential((down - xj).norm(), &p).unwrap()) / (2.0 * h)
        });
        let scale = grad.norm().max(1e-3);
        worst_fd = worst_fd.max((fd - grad).norm() / scale);
    }

    // identity scales against the written-out model, 1000 steps
    let mut s = Scenario::reference(8).with_seed(77).with_horizon(1.0);
    s.alpha_nominal = 1.0;
    let x0 = generate_initial(s.seed, &s).unwrap();
    let model = s.model(&x0).unwrap();
    let scaled = simulate_with(
        &x0,
        &s,
        &mut swarm_impedance::controller::FixedGain(1.0),
        SimOptions {
            record_states: true,
            record_forces: false,
        },
    )
    .unwrap();
    let mut reference = x0.clone();
    let mut divergence = 0.0f64;
    for snap in scaled.snapshots.iter().take(1001) {
        for (a, b) in snap.positions.iter().zip(&reference.positions) {
            divergence = divergence.max((a - b).norm());
        }
        let w = reference_forces(&reference, &model);
        reference = step(&reference, &w, s.dt).unwrap();
    }

    // Kronecker identity on the weighted incidence
    let mut kron_exact = true;
    for n in 2..=8 {
        let topo = SwarmTopology::new(n).unwrap();
        let ig = topo.incidence();
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(topo.n_edges(), |_, _| rng.gen_range(1e-4..1e2)));
        let i3 = DMatrix::<f64>::identity(3, 3);
        let lhs = (&ig * &a).kronecker(&i3);
        let rhs = ig.kronecker(&i3) * a.kronecker(&i3);
        kron_exact &= lhs == rhs;
    }

    let barrier_ok = log.runs > 0 && log.min_distance > p.delta_s;
    Outcome::new(
        worst_fd <= 1e-5 && divergence <= 1e-12 && kron_exact && barrier_ok,
        format!(
            "gradient vs finite differences {worst_fd:.1e}; identity scaling divergence {divergence:.1e} over 1000 steps; Kronecker identity {}; min distance {:.3} over {} completed runs ({} aborted: {:?})",
            if kron_exact { "exact" } else { "INEXACT" },
            log.min_distance,
            log.runs,
            log.aborted.len(),
            log.aborted
        ),
    )
}

fn main() -> ExitCode {
    let mut log = BarrierLog::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    results.push(("passivity, constant gain", criterion_1(&mut log)));
    results.push(("passivity, scaled gains", criterion_2(&mut log)));
    results.push(("optimizer against grid search", criterion_3()));
    match showcase(&mut log) {
        Ok(sc) => {
            results.push(("impedance matching", criterion_4(&sc)));
            results.push(("contact cost, tunable vs constant gain", criterion_5(&sc)));
            results.push(("barycenter deviation", criterion_6(&sc)));
        }
        Err(e) => {
            for name in ["impedance matching", "contact cost, tunable vs constant gain", "barycenter deviation"] {
                results.push((name, Outcome::new(false, format!("comparison run aborted: {e}"))));
            }
        }
    }
    results.push(("64 robots, 10 s", criterion_7(&mut log)));
    results.push(("numerical hygiene", criterion_8(&log)));

    let mut all = true;
    for (k, (name, outcome)) in results.iter().enumerate() {
        all &= outcome.pass;
        println!(
            "[{}] criterion {} ({name}): {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            k + 1,
            outcome.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
