//! Executive parameters, one section per subsystem.

use serde::{Deserialize, Serialize};

use crate::arm::{ArmSpec, IkParams, PollinationParams, ServoParams};
use crate::planning::{CostParams, DwaParams, VoronoiParams};
use crate::slam::SlamParams;

use super::MissionError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VisionParams {
    /// Detections geolocated beyond this range are dropped, meters.
    pub max_range: f64,
    /// Seconds between camera frames during inspection.
    pub frame_period: f64,
}

impl Default for VisionParams {
    fn default() -> Self {
        Self {
            max_range: 2.5,
            frame_period: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanningParams {
    pub grid_resolution: f64,
    /// Added to the robot radius when inflating the map for driving.
    pub inflation_margin: f64,
    /// Extra inflation for global paths so they keep off the band the
    /// local controller treats as blocked. Dropped when no path exists.
    pub path_margin: f64,
    pub voronoi: VoronoiParams,
    pub cost: CostParams,
    pub dwa: DwaParams,
    /// Pure-pursuit lookahead for the DWA goal point, meters.
    pub lookahead: f64,
    /// Switch from DWA to the final approach inside this radius, meters.
    pub approach_radius: f64,
    /// Parking arrival tolerances.
    pub arrival_position: f64,
    pub arrival_heading: f64,
    /// A leg with no progress for this long fails, seconds.
    pub stuck_timeout: f64,
}

impl Default for PlanningParams {
    fn default() -> Self {
        Self {
            grid_resolution: 0.05,
            inflation_margin: 0.1,
            path_margin: 0.05,
            voronoi: VoronoiParams {
                min_clearance: 0.35,
                ..VoronoiParams::default()
            },
            cost: CostParams::default(),
            dwa: DwaParams::default(),
            lookahead: 0.6,
            approach_radius: 0.4,
            arrival_position: 0.05,
            arrival_heading: 5f64.to_radians(),
            stuck_timeout: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmParams {
    pub spec: ArmSpec,
    pub ik: IkParams,
    pub servo: ServoParams,
    pub pollination: PollinationParams,
    /// Per-axis noise of the close-range survey, meters.
    pub sigma_far: f64,
    /// Seconds spent sweeping the survey pattern.
    pub survey_duration: f64,
    /// Joint-space speed for moves between targets, rad/s.
    pub joint_speed: f64,
    /// Servo starts this far short of the surveyed position, meters.
    pub standoff: f64,
    pub max_servo_steps: usize,
    pub stroke_duration: f64,
}

impl Default for ArmParams {
    fn default() -> Self {
        Self {
            spec: ArmSpec::default(),
            ik: IkParams::default(),
            servo: ServoParams::default(),
            pollination: PollinationParams::default(),
            sigma_far: 0.02,
            survey_duration: 4.0,
            joint_speed: 1.0,
            standoff: 0.2,
            max_servo_steps: 60,
            stroke_duration: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionParams {
    /// Control period, seconds.
    pub dt: f64,
    /// The run stops here if the mission has not finished, seconds.
    pub max_time: f64,
}

impl Default for MissionParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            max_time: 3600.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionConfig {
    pub slam: SlamParams,
    pub vision: VisionParams,
    pub planning: PlanningParams,
    pub arm: ArmParams,
    pub mission: MissionParams,
}

impl MissionConfig {
    pub fn validate(&self) -> Result<(), MissionError> {
        let invalid = |what: &str| Err(MissionError::InvalidConfig(what.to_string()));
        let m = &self.mission;
        if !(m.dt > 0.0 && m.dt.is_finite()) {
            return invalid("mission.dt must be positive");
        }
        if !(m.max_time >= 0.0) {
            return invalid("mission.max_time must be non-negative");
        }
        let p = &self.planning;
        if !(p.grid_resolution > 0.0 && p.inflation_margin >= 0.0 && p.path_margin >= 0.0 && p.lookahead > 0.0) {
            return invalid("planning grid resolution and lookahead must be positive");
        }
        if !(p.arrival_position > 0.0 && p.arrival_heading > 0.0 && p.approach_radius > p.arrival_position) {
            return invalid("planning arrival tolerances must be positive and below the approach radius");
        }
        if !(self.vision.frame_period > 0.0 && self.vision.max_range > 0.0) {
            return invalid("vision frame period and range must be positive");
        }
        let a = &self.arm;
        if !(a.sigma_far >= 0.0 && a.joint_speed > 0.0 && a.standoff >= 0.0 && a.stroke_duration >= 0.0) {
            return invalid("arm timings, speed and noise must be non-negative");
        }
        p.cost
            .validate()
            .map_err(|e| MissionError::InvalidConfig(e.to_string()))?;
        p.dwa
            .validate()
            .map_err(|e| MissionError::InvalidConfig(e.to_string()))?;
        a.spec
            .validate()
            .map_err(|e| MissionError::InvalidConfig(e.to_string()))?;
        a.servo
            .validate()
            .map_err(|e| MissionError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}
