//! Run metrics and the end-of-session summary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::world::World;

use super::database::{AttemptOutcome, FlowerDatabase};
use super::MissionPhase;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub distance_m: f64,
    pub sim_time_s: f64,
    pub pollinated: usize,
    pub attempted: usize,
    pub collisions: usize,
    /// Seconds spent in each phase.
    pub phase_durations: BTreeMap<MissionPhase, f64>,
    pub pose_sq_error_sum: f64,
    pub pose_samples: usize,
}

impl Metrics {
    /// RMS of the estimated-vs-true position error over all ticks.
    pub fn pose_rmse(&self) -> f64 {
        if self.pose_samples == 0 {
            0.0
        } else {
            (self.pose_sq_error_sum / self.pose_samples as f64).sqrt()
        }
    }
}

/// Totals reported for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub distance_m: f64,
    pub sim_time_s: f64,
    pub pollinated: usize,
    pub attempted: usize,
    /// Flowers that were Ready at any point during the session.
    pub ready_total: usize,
    pub rate: f64,
    pub collisions: usize,
    pub pose_rmse_m: f64,
}

impl Summary {
    pub const CSV_HEADER: &'static str =
        "distance_m,sim_time_s,pollinated,attempted,ready_total,rate,collisions,pose_rmse_m";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.3},{},{},{},{:.6},{},{:.6}",
            self.distance_m,
            self.sim_time_s,
            self.pollinated,
            self.attempted,
            self.ready_total,
            self.rate,
            self.collisions,
            self.pose_rmse_m
        )
    }
}

/// `rate = pollinated / ready_total`, or 1.0 when no flower was ever ready.
pub fn pollination_rate(pollinated: usize, ready_total: usize) -> f64 {
    if ready_total == 0 {
        1.0
    } else {
        pollinated as f64 / ready_total as f64
    }
}

pub fn summarize(metrics: &Metrics, db: &FlowerDatabase, world: &World) -> Summary {
    let ready_total = world.flowers().iter().filter(|f| f.was_ready()).count();
    let pollinated = db
        .attempts
        .iter()
        .filter(|a| a.outcome == AttemptOutcome::Pollinated)
        .count();
    Summary {
        distance_m: metrics.distance_m,
        sim_time_s: metrics.sim_time_s,
        pollinated,
        attempted: db.attempts.len(),
        ready_total,
        rate: pollination_rate(pollinated, ready_total),
        collisions: metrics.collisions,
        pose_rmse_m: metrics.pose_rmse(),
    }
}
