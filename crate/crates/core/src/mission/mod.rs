//! The pollination session: a phase machine driving every other module.

mod config;
mod database;
mod executive;
mod metrics;

pub use config::{ArmParams, MissionConfig, MissionParams, PlanningParams, VisionParams};
pub use database::{AttemptOutcome, FlowerAttempt, FlowerDatabase, SkippedCell};
pub use executive::{is_valid_trace, Mission, MissionPhase, RunOutcome, TrajectorySample, STOWED};
pub use metrics::{pollination_rate, summarize, Metrics, Summary};

use crate::arm::ArmError;
use crate::planning::PlanningError;
use crate::slam::SlamError;
use crate::vision::VisionError;
use crate::world::WorldError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MissionError {
    #[error("invalid mission configuration: {0}")]
    InvalidConfig(String),
    #[error("could not localize in the prior map: {0}")]
    Localization(SlamError),
    #[error(transparent)]
    Slam(#[from] SlamError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error(transparent)]
    Vision(#[from] VisionError),
    #[error(transparent)]
    Arm(#[from] ArmError),
    #[error("world error: {0}")]
    World(String),
}

impl From<WorldError> for MissionError {
    fn from(e: WorldError) -> Self {
        MissionError::World(e.to_string())
    }
}
