//! Pollination history: per-cell observations and per-flower attempts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::vision::CellFlowerMap;
use crate::world::GridCellRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttemptOutcome {
    Pollinated,
    /// Brushed but coverage stayed under the threshold.
    Insufficient,
    /// Servo did not converge within its step budget.
    ServoFailed,
    /// The flower left `Ready` before the brush reached it.
    NotReady,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowerAttempt {
    pub flower_id: u32,
    pub cell: GridCellRef,
    pub time: f64,
    pub outcome: AttemptOutcome,
}

/// Cells the executive gave up on and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub cell: GridCellRef,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowerDatabase {
    pub cells: CellFlowerMap,
    pub attempts: Vec<FlowerAttempt>,
    /// Flower id → time it was pollinated.
    pub pollinated: BTreeMap<u32, f64>,
    pub skipped: Vec<SkippedCell>,
    /// Surveyed flowers that the arm could not reach.
    pub unreachable: Vec<u32>,
}

impl FlowerDatabase {
    pub fn record(&mut self, attempt: FlowerAttempt) {
        if attempt.outcome == AttemptOutcome::Pollinated {
            self.pollinated.insert(attempt.flower_id, attempt.time);
        }
        self.attempts.push(attempt);
    }

    pub fn is_pollinated(&self, flower_id: u32) -> bool {
        self.pollinated.contains_key(&flower_id)
    }

    pub fn attempts_on(&self, flower_id: u32) -> impl Iterator<Item = &FlowerAttempt> {
        self.attempts.iter().filter(move |a| a.flower_id == flower_id)
    }
}
