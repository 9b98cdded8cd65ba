use serde::{Deserialize, Serialize};

use crate::geometry::Point3;

/// Which face of a plant row. `Left` is the face on the counter-clockwise
/// normal of the row's centerline direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    /// +1 for the left face, -1 for the right face.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

/// One grid cell on one side of a plant row. Ordering is lexicographic in
/// `(row_id, side, index)` and is the tie-break order used by the planners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridCellRef {
    pub row_id: u32,
    pub side: Side,
    pub index: usize,
}

impl GridCellRef {
    pub fn new(row_id: u32, side: Side, index: usize) -> Self {
        Self { row_id, side, index }
    }
}

impl std::fmt::Display for GridCellRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = match self.side {
            Side::Left => "L",
            Side::Right => "R",
        };
        write!(f, "r{}{}{}", self.row_id, side, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowerState {
    Bud,
    Ready,
    Pollinated,
    Wilted,
}

impl FlowerState {
    pub fn is_terminal(self) -> bool {
        matches!(self, FlowerState::Pollinated | FlowerState::Wilted)
    }

    /// Legal single-step transitions of the phenology state machine.
    pub fn can_transition_to(self, next: FlowerState) -> bool {
        use FlowerState::*;
        matches!((self, next), (Bud, Ready) | (Ready, Pollinated) | (Ready, Wilted))
    }
}

/// A flower cluster with its deterministic readiness window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flower {
    pub id: u32,
    pub position: Point3,
    pub cell: GridCellRef,
    pub ready_time: f64,
    pub wilt_time: f64,
    state: FlowerState,
    pistil_coverage: f64,
    /// Simulation time at which the flower entered `Ready`, if it has.
    pub ready_at: Option<f64>,
    pub pollinated_at: Option<f64>,
    pub wilted_at: Option<f64>,
}

impl Flower {
    pub fn new(id: u32, position: Point3, cell: GridCellRef, ready_time: f64, wilt_time: f64) -> Self {
        Self {
            id,
            position,
            cell,
            ready_time,
            wilt_time,
            state: FlowerState::Bud,
            pistil_coverage: 0.0,
            ready_at: None,
            pollinated_at: None,
            wilted_at: None,
        }
    }

    pub fn state(&self) -> FlowerState {
        self.state
    }

    pub fn pistil_coverage(&self) -> f64 {
        self.pistil_coverage
    }

    /// True once the flower has been pollination-ready at some point.
    pub fn was_ready(&self) -> bool {
        self.state != FlowerState::Bud
    }

    /// Applies the readiness schedule at `time`.
    pub fn advance(&mut self, time: f64) {
        if self.state == FlowerState::Bud && time >= self.ready_time {
            self.state = FlowerState::Ready;
            self.ready_at = Some(time);
        }
        if self.state == FlowerState::Ready && time >= self.wilt_time {
            self.state = FlowerState::Wilted;
            self.wilted_at = Some(time);
        }
    }

    /// Adds brushed pistil coverage, capped at 1. Crossing `threshold`
    /// pollinates the flower. Only `Ready` flowers accept coverage.
    pub(crate) fn add_coverage(&mut self, amount: f64, threshold: f64, time: f64) -> bool {
        if self.state != FlowerState::Ready {
            return false;
        }
        self.pistil_coverage = (self.pistil_coverage + amount.max(0.0)).min(1.0);
        if self.pistil_coverage >= threshold {
            self.state = FlowerState::Pollinated;
            self.pollinated_at = Some(time);
        }
        true
    }
}
