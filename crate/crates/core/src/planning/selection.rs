//! Greedy choice of the next cell to pollinate.

use serde::{Deserialize, Serialize};

use crate::geometry::Pose2;
use crate::world::GridCellRef;

use super::PlanningError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateCell {
    pub cell: GridCellRef,
    pub parking: Pose2,
    /// Observed flower clusters in the cell.
    pub n_f: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostParams {
    /// Weight per meter of travel.
    pub c_d: f64,
    /// Weight on the inverse flower count.
    pub c_f: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { c_d: 1.0, c_f: 1.0 }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<(), PlanningError> {
        if self.c_d > 0.0 && self.c_f > 0.0 && self.c_d.is_finite() && self.c_f.is_finite() {
            Ok(())
        } else {
            Err(PlanningError::InvalidParams(format!(
                "cost weights must be positive, got c_d={} c_f={}",
                self.c_d, self.c_f
            )))
        }
    }
}

/// `c_d·‖parking − robot‖ + c_f / n_f`, position only.
pub fn selection_cost(robot: &Pose2, candidate: &CandidateCell, params: &CostParams) -> f64 {
    let d = (candidate.parking.position() - robot.position()).norm();
    params.c_d * d + params.c_f / candidate.n_f as f64
}

/// Minimum-cost candidate among those with at least one flower; ties go to
/// the lowest cell.
pub fn next_pollination_cell(
    robot: &Pose2,
    candidates: &[CandidateCell],
    params: &CostParams,
) -> Result<CandidateCell, PlanningError> {
    params.validate()?;
    let mut best: Option<(f64, &CandidateCell)> = None;
    for c in candidates.iter().filter(|c| c.n_f > 0) {
        let cost = selection_cost(robot, c, params);
        let better = match best {
            None => true,
            Some((bc, b)) => cost < bc || (cost == bc && c.cell < b.cell),
        };
        if better {
            best = Some((cost, c));
        }
    }
    best.map(|(_, c)| *c).ok_or(PlanningError::NoCandidates)
}
