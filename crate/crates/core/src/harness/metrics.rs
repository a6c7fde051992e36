use std::io::{self, Write};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::simulation::Trajectory;

/// Column order of `metrics.csv`; per-robot blocks follow when full state is
/// requested.
pub const CSV_COLUMNS: [&str; 13] = [
    "time",
    "contact_robot",
    "cost_f",
    "alpha_star",
    "gamma",
    "H",
    "H_s",
    "supplied_integral",
    "margin_p1",
    "margin_p2",
    "bary_x",
    "bary_y",
    "bary_z",
];

/// Guard on near-zero barycenter coordinates in percentage deviations.
pub const DEVIATION_EPS: f64 = 1e-9;

/// One line of `metrics.csv`. `contact_robot` is 1-based, `-1` without
/// contact; `cost_f` is `-1` exactly when there is no contact.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub time: f64,
    pub contact_robot: i64,
    pub cost_f: f64,
    pub alpha_star: f64,
    pub gamma: f64,
    pub h: f64,
    pub h_s: f64,
    pub supplied_integral: f64,
    pub margin_p1: f64,
    pub margin_p2: f64,
    pub barycenter: Vector3<f64>,
    /// `(position, velocity)` per robot.
    pub full_state: Option<Vec<(Vector3<f64>, Vector3<f64>)>>,
}

pub fn metrics_rows(traj: &Trajectory) -> Vec<MetricsRow> {
    let ledger = &traj.ledger;
    traj.records
        .iter()
        .zip(&ledger.history)
        .enumerate()
        .map(|(n, (rec, sample))| MetricsRow {
            time: rec.time,
            contact_robot: rec.contact_robot.map_or(-1, |i| i as i64 + 1),
            cost_f: rec.cost.unwrap_or(-1.0),
            alpha_star: rec.alpha,
            gamma: rec.gamma,
            h: sample.h,
            h_s: sample.h_s,
            supplied_integral: sample.supplied,
            margin_p1: sample.supplied + ledger.initial_h,
            margin_p2: sample.supplied + ledger.initial_kinetic_sum,
            barycenter: rec.barycenter,
            full_state: traj
                .snapshots
                .get(n)
                .map(|s| s.positions.iter().copied().zip(s.velocities.iter().copied()).collect()),
        })
        .collect()
}

/// Shortest decimal that reads back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv<W: Write>(out: &mut W, rows: &[MetricsRow], full_state: bool) -> io::Result<()> {
    let n_robots = rows
        .first()
        .and_then(|r| r.full_state.as_ref())
        .map_or(0, |s| s.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = CSV_COLUMNS.iter().map(|c| c.to_string()).collect();
    if full_state {
        for i in 1..=n_robots {
            header.extend(["x", "y", "z", "vx", "vy", "vz"].map(|c| format!("{c}_{i}")));
        }
    }
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for r in rows {
        record.clear();
        record.push(num(r.time));
        record.push(r.contact_robot.to_string());
        record.extend(
            [
                r.cost_f,
                r.alpha_star,
                r.gamma,
                r.h,
                r.h_s,
                r.supplied_integral,
                r.margin_p1,
                r.margin_p2,
                r.barycenter.x,
                r.barycenter.y,
                r.barycenter.z,
            ]
            .map(num),
        );
        if full_state {
            for (x, v) in r.full_state.iter().flatten() {
                record.extend(x.iter().chain(v.iter()).map(|c| num(*c)));
            }
        }
        w.write_record(&record)?;
    }
    w.flush()
}

/// Per-axis percentage deviation of the tunable barycenter from the nominal
/// one: `100 (b_t - b_n) / max(|b_n|, ε)`.
pub fn barycenter_deviation(tunable: &Trajectory, nominal: &Trajectory) -> Result<Vec<[f64; 3]>> {
    if tunable.records.len() != nominal.records.len() {
        return Err(Error::GridMismatch(format!(
            "{} samples vs {}",
            tunable.records.len(),
            nominal.records.len()
        )));
    }
    tunable
        .records
        .iter()
        .zip(&nominal.records)
        .map(|(t, n)| {
            if (t.time - n.time).abs() > 1e-9 * (1.0 + n.time.abs()) {
                return Err(Error::GridMismatch(format!("t = {} vs t = {}", t.time, n.time)));
            }
            let mut dev = [0.0; 3];
            for (a, d) in dev.iter_mut().enumerate() {
                *d = 100.0 * (t.barycenter[a] - n.barycenter[a]) / n.barycenter[a].abs().max(DEVIATION_EPS);
            }
            Ok(dev)
        })
        .collect()
}

/// Maximal time intervals during which some robot was in contact.
pub fn contact_windows(traj: &Trajectory) -> Vec<(f64, f64)> {
    let mut windows = Vec::new();
    let mut open: Option<f64> = None;
    let mut last = 0.0;
    for r in &traj.records {
        match (open, r.contact_robot.is_some()) {
            (None, true) => open = Some(r.time),
            (Some(start), false) => {
                windows.push((start, last));
                open = None;
            }
            _ => {}
        }
        last = r.time;
    }
    if let Some(start) = open {
        windows.push((start, last));
    }
    windows
}
