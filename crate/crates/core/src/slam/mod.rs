//! Pose-graph state estimation against a prior map of the room.

mod anchor;
mod estimator;
mod graph;
mod grid;
mod icp;
mod index;
mod lm;

use thiserror::Error;

pub use anchor::{estimate_initial_offset, OffsetParams};
pub use estimator::{KeyframeReport, PoseGraphEstimator, SlamParams};
pub use graph::{
    diagonal_information, graph_cost, graph_residual, AnchorFactor, FactorGraph, NodeId, OdometryFactor, SparseJacobian,
};
pub use grid::{inflate, rasterize, room_grid, Cell, CellState, GridSpec, OccupancyGrid};
pub use icp::{best_rigid_transform, icp_match, icp_match_indexed, loop_closure_check, IcpParams, IcpResult};
pub use index::PointIndex;
pub use lm::{optimize_lm, LmParams, LmReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlamError {
    #[error("only {correspondences} correspondences within the gate")]
    Degenerate { correspondences: usize },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("factor graph has no anchor factor")]
    NoAnchor,
    #[error("no alignment passed the match gate (best fraction {best_fraction:.3})")]
    NoAlignment { best_fraction: f64 },
    #[error("invalid factor: {0}")]
    InvalidFactor(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("estimate has {got} poses, graph has {expected} nodes")]
    EstimateMismatch { expected: usize, got: usize },
}
