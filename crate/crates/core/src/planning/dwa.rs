//! Dynamic Window Approach local control.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Point2, Pose2};
use crate::slam::OccupancyGrid;
use crate::world::{integrate_unicycle, RobotState};

use super::distance::DistanceField;
use super::PlanningError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DwaWeights {
    pub heading: f64,
    pub clearance: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DwaParams {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub accel_v: f64,
    pub accel_omega: f64,
    pub v_samples: usize,
    pub omega_samples: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Clearance beyond this distance scores the same, meters.
    pub clearance_cap: f64,
    pub weights: DwaWeights,
}

impl Default for DwaWeights {
    fn default() -> Self {
        Self {
            heading: 1.0,
            clearance: 0.3,
            velocity: 0.5,
        }
    }
}

impl Default for DwaParams {
    fn default() -> Self {
        Self {
            v_min: 0.0,
            v_max: 0.5,
            omega_max: 1.0,
            accel_v: 0.5,
            accel_omega: 2.0,
            v_samples: 11,
            omega_samples: 21,
            horizon: 2.0,
            dt: 0.1,
            clearance_cap: 1.0,
            weights: DwaWeights::default(),
        }
    }
}

impl DwaParams {
    pub fn validate(&self) -> Result<(), PlanningError> {
        let w = &self.weights;
        let nonneg = [
            self.v_min,
            self.v_max,
            self.omega_max,
            self.accel_v,
            self.accel_omega,
            self.clearance_cap,
            w.heading,
            w.clearance,
            w.velocity,
        ];
        let ok = nonneg.iter().all(|x| x.is_finite() && *x >= 0.0)
            && self.v_min <= self.v_max
            && self.v_samples >= 2
            && self.omega_samples >= 2
            && self.horizon > 0.0
            && self.dt > 0.0
            && self.clearance_cap > 0.0;
        if ok {
            Ok(())
        } else {
            Err(PlanningError::InvalidParams(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub v: f64,
    pub omega: f64,
}

/// Caches the distance field of the (inflated) grid across control ticks.
#[derive(Debug, Clone)]
pub struct DwaPlanner {
    grid: OccupancyGrid,
    field: DistanceField,
    /// Chamfer distance from each blocked cell to the nearest free one.
    depth: Vec<f64>,
    params: DwaParams,
}

fn blocked_depth(grid: &OccupancyGrid) -> Vec<f64> {
    let mut depth = vec![f64::INFINITY; grid.width() * grid.height()];
    let mut heap = BinaryHeap::new();
    for (i, d) in depth.iter_mut().enumerate() {
        if grid.is_free(grid.cell_at_index(i)) {
            *d = 0.0;
            heap.push(Reverse((OrderedDepth(0.0), i)));
        }
    }
    while let Some(Reverse((OrderedDepth(d), i))) = heap.pop() {
        if d > depth[i] {
            continue;
        }
        let (x, y) = grid.cell_at_index(i);
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if !grid.in_bounds(nx, ny) {
                continue;
            }
            let j = grid.index((nx as usize, ny as usize));
            let nd = d + if dx != 0 && dy != 0 { SQRT_2 } else { 1.0 };
            if nd < depth[j] {
                depth[j] = nd;
                heap.push(Reverse((OrderedDepth(nd), j)));
            }
        }
    }
    depth
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrderedDepth(f64);

impl Eq for OrderedDepth {}

impl Ord for OrderedDepth {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for OrderedDepth {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn samples(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if hi <= lo {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

impl DwaPlanner {
    pub fn new(grid: OccupancyGrid, params: DwaParams) -> Result<Self, PlanningError> {
        params.validate()?;
        let field = DistanceField::new(&grid);
        let depth = blocked_depth(&grid);
        Ok(Self {
            grid,
            field,
            depth,
            params,
        })
    }

    pub fn params(&self) -> &DwaParams {
        &self.params
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    /// Poses along the constant-velocity rollout, spaced at most half a cell
    /// apart, starting at the current pose.
    pub fn rollout(&self, pose: &Pose2, cmd: VelocityCommand) -> Vec<Pose2> {
        let p = &self.params;
        let v = cmd.v.abs();
        let length = (p.horizon * v).max(v * v / (2.0 * p.accel_v.max(1e-9)));
        let duration = if v > 0.0 { length / v } else { p.horizon };
        let step_len = 0.5 * self.grid.resolution();
        let by_len = if v > 0.0 {
            (length / step_len).ceil() as usize
        } else {
            0
        };
        let by_angle = (cmd.omega.abs() * duration / 0.05).ceil() as usize;
        let n = by_len.max(by_angle).max((duration / p.dt).ceil() as usize).max(1);
        let h = duration / n as f64;
        (0..=n)
            .map(|k| integrate_unicycle(pose, cmd.v, cmd.omega, h * k as f64))
            .collect()
    }

    /// Minimum obstacle clearance along the rollout in meters, or `None` if
    /// any pose leaves free space.
    ///
    /// A robot already inside the blocked band (estimate noise, a snapped
    /// path endpoint) may turn in place or take rollouts that end shallower
    /// without ever going deeper; those score zero clearance.
    pub fn rollout_clearance(&self, poses: &[Pose2]) -> Option<f64> {
        let start = self.grid.cell_of(&poses.first()?.position())?;
        if !self.grid.is_free(start) {
            let first = self.depth[self.grid.index(start)];
            let mut last = first;
            for pose in &poses[1..] {
                let d = self.depth[self.grid.index(self.grid.cell_of(&pose.position())?)];
                if d > last + 1e-9 {
                    return None;
                }
                last = d;
            }
            // Moving rollouts must make headway out, or the robot could creep
            // deeper in steps too short to leave the start cell.
            let moves = poses.first()?.position() != poses.last()?.position();
            return (!moves || last < first).then_some(0.0);
        }
        let mut min = f64::INFINITY;
        for pose in poses {
            let cell = self.grid.cell_of(&pose.position())?;
            if !self.grid.is_free(cell) {
                return None;
            }
            min = min.min(self.field.meters(cell));
        }
        Some(min)
    }

    /// Best admissible command in the reachable window, or an in-place turn
    /// toward the goal when nothing is admissible.
    pub fn step(&self, state: &RobotState, goal: &Point2) -> VelocityCommand {
        let p = &self.params;
        let v_lo = (state.v - p.accel_v * p.dt).max(p.v_min);
        let v_hi = (state.v + p.accel_v * p.dt).min(p.v_max);
        let w_lo = (state.omega - p.accel_omega * p.dt).max(-p.omega_max);
        let w_hi = (state.omega + p.accel_omega * p.dt).min(p.omega_max);
        let (v_lo, v_hi) = if v_lo > v_hi { (v_hi, v_hi) } else { (v_lo, v_hi) };
        let (w_lo, w_hi) = if w_lo > w_hi { (w_hi, w_hi) } else { (w_lo, w_hi) };

        let to_goal = goal - state.pose.position();
        let goal_ahead = wrap_angle(to_goal.y.atan2(to_goal.x) - state.pose.theta).abs() <= PI / 2.0;
        let mut best: Option<(f64, VelocityCommand)> = None;
        for v in samples(v_lo, v_hi, p.v_samples) {
            for omega in samples(w_lo, w_hi, p.omega_samples) {
                let cmd = VelocityCommand { v, omega };
                let poses = self.rollout(&state.pose, cmd);
                let Some(clear) = self.rollout_clearance(&poses) else {
                    continue;
                };
                let score = self.score(&poses, clear, v, goal, goal_ahead);
                if best.is_none_or(|(b, _)| score > b) {
                    best = Some((score, cmd));
                }
            }
        }
        best.map(|(_, c)| c).unwrap_or_else(|| {
            let bearing = wrap_angle(to_goal.y.atan2(to_goal.x) - state.pose.theta);
            VelocityCommand {
                v: 0.0,
                omega: if bearing < 0.0 { -p.omega_max } else { p.omega_max },
            }
        })
    }

    fn score(&self, poses: &[Pose2], clearance: f64, v: f64, goal: &Point2, goal_ahead: bool) -> f64 {
        let p = &self.params;
        let end = poses.last().expect("rollout is never empty");
        let d = goal - end.position();
        let heading = if d.norm() < 1e-9 {
            1.0
        } else {
            1.0 - wrap_angle(d.y.atan2(d.x) - end.theta).abs() / PI
        };
        let clear = clearance.min(p.clearance_cap) / p.clearance_cap;
        let speed = if p.v_max > 0.0 { v / p.v_max } else { 0.0 };
        let velocity = if goal_ahead { speed } else { 1.0 - speed };
        p.weights.heading * heading + p.weights.clearance * clear + p.weights.velocity * velocity
    }
}

/// One-shot DWA. Builds the distance field on every call; the mission keeps
/// a [`DwaPlanner`] instead.
pub fn dwa_step(
    state: &RobotState,
    local_goal: &Point2,
    grid: &OccupancyGrid,
    params: &DwaParams,
) -> Result<VelocityCommand, PlanningError> {
    Ok(DwaPlanner::new(grid.clone(), *params)?.step(state, local_goal))
}
