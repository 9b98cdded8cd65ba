//! Scenario files: one JSON document configuring the world and every
//! subsystem of a session.

use std::path::Path;

use serde::{Deserialize, Serialize};

use bramble::mission::{ArmParams, MissionConfig, MissionParams, PlanningParams, VisionParams};
use bramble::slam::SlamParams;
use bramble::world::{
    CameraSpec, Doorway, FlowerSpec, OdometryNoise, PlantRow, RobotSpec, ScanSpec, WorldConfig, DEFAULT_PARKING_OFFSET,
};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSection {
    pub room_width: f64,
    pub room_length: f64,
    #[serde(default)]
    pub doorways: Vec<Doorway>,
    pub rows: Vec<PlantRow>,
    pub flowers: Vec<FlowerSpec>,
    #[serde(default)]
    pub robot: RobotSpec,
    #[serde(default = "default_parking_offset")]
    pub parking_offset: f64,
}

fn default_parking_offset() -> f64 {
    DEFAULT_PARKING_OFFSET
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSection {
    pub odometry: OdometryNoise,
    pub scan: ScanSpec,
    pub camera: CameraSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: u64,
    pub world: WorldSection,
    #[serde(default)]
    pub sensors: SensorSection,
    #[serde(default)]
    pub slam: SlamParams,
    #[serde(default)]
    pub vision: VisionParams,
    #[serde(default)]
    pub planning: PlanningParams,
    #[serde(default)]
    pub arm: ArmParams,
    #[serde(default)]
    pub mission: MissionParams,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn world_config(&self) -> WorldConfig {
        let w = &self.world;
        WorldConfig {
            room_width: w.room_width,
            room_length: w.room_length,
            doorways: w.doorways.clone(),
            rows: w.rows.clone(),
            flowers: w.flowers.clone(),
            robot: w.robot,
            odom_noise: self.sensors.odometry,
            scan_spec: self.sensors.scan,
            camera_spec: self.sensors.camera,
            parking_offset: w.parking_offset,
            seed: self.seed,
        }
    }

    pub fn mission_config(&self) -> MissionConfig {
        MissionConfig {
            slam: self.slam,
            vision: self.vision,
            planning: self.planning,
            arm: self.arm,
            mission: self.mission,
        }
    }
}
