//! Drive-level planning: inspection roadmap, cell selection, global paths
//! and local control.

mod dijkstra;
mod distance;
mod dwa;
mod inspection;
mod selection;
mod voronoi;

pub use dijkstra::{dijkstra_path, grid_moves, path_cost};
pub use distance::DistanceField;
pub use dwa::{dwa_step, DwaParams, DwaPlanner, DwaWeights, VelocityCommand};
pub use inspection::{graph_dijkstra, plan_inspection, InspectionRoute, RouteStep};
pub use selection::{next_pollination_cell, selection_cost, CandidateCell, CostParams};
pub use voronoi::{build_voronoi, tag_required, VoronoiEdge, VoronoiGraph, VoronoiParams};

use crate::slam::Cell;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanningError {
    #[error("grid has no free cells")]
    NoFreeSpace,
    #[error("a required edge is unreachable from the start node")]
    Unreachable,
    #[error("no candidate cell has an observed flower")]
    NoCandidates,
    #[error("goal is unreachable")]
    NoPath,
    #[error("endpoint {0:?} is not free")]
    BlockedEndpoint(Cell),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}
