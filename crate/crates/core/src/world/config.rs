use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geometry::Pose2;

use super::flower::Side;

/// Default row length of the reference greenhouse, in meters.
pub const DEFAULT_ROW_LENGTH: f64 = 3.44;
/// Default number of grid cells on each side of a row.
pub const DEFAULT_CELLS_PER_SIDE: usize = 5;
/// Default perpendicular offset of a parking pose from the row centerline.
pub const DEFAULT_PARKING_OFFSET: f64 = 0.75;

/// Ground-truth description of a greenhouse room, its rows and flowers, the
/// robot and its sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    /// Room extent along x, meters. The room spans `[0, room_width] × [0, room_length]`.
    pub room_width: f64,
    /// Room extent along y, meters.
    pub room_length: f64,
    #[serde(default)]
    pub doorways: Vec<Doorway>,
    #[serde(default)]
    pub rows: Vec<PlantRow>,
    #[serde(default)]
    pub flowers: Vec<FlowerSpec>,
    #[serde(default)]
    pub robot: RobotSpec,
    #[serde(default)]
    pub odom_noise: OdometryNoise,
    #[serde(default)]
    pub scan_spec: ScanSpec,
    #[serde(default)]
    pub camera_spec: CameraSpec,
    #[serde(default = "default_parking_offset")]
    pub parking_offset: f64,
    pub seed: u64,
}

fn default_parking_offset() -> f64 {
    DEFAULT_PARKING_OFFSET
}

impl WorldConfig {
    /// An empty room with default robot and sensors.
    pub fn empty_room(room_width: f64, room_length: f64, seed: u64) -> Self {
        Self {
            room_width,
            room_length,
            doorways: Vec::new(),
            rows: Vec::new(),
            flowers: Vec::new(),
            robot: RobotSpec::default(),
            odom_noise: OdometryNoise::default(),
            scan_spec: ScanSpec::default(),
            camera_spec: CameraSpec::default(),
            parking_offset: DEFAULT_PARKING_OFFSET,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wall {
    /// y = 0
    South,
    /// y = room_length
    North,
    /// x = 0
    West,
    /// x = room_width
    East,
}

/// A gap in one wall, given as an interval of the coordinate running along it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Doorway {
    pub wall: Wall,
    pub from: f64,
    pub to: f64,
}

/// A rectangular plant row around a straight centerline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantRow {
    pub id: u32,
    pub start: [f64; 2],
    pub end: [f64; 2],
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_cells_per_side")]
    pub cells_per_side: usize,
}

fn default_half_width() -> f64 {
    0.3
}

fn default_cells_per_side() -> usize {
    DEFAULT_CELLS_PER_SIDE
}

impl PlantRow {
    /// A default-length row running along +x from `(x0, y)`.
    pub fn along_x(id: u32, x0: f64, y: f64) -> Self {
        Self {
            id,
            start: [x0, y],
            end: [x0 + DEFAULT_ROW_LENGTH, y],
            half_width: default_half_width(),
            cells_per_side: DEFAULT_CELLS_PER_SIDE,
        }
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    pub fn cell_length(&self) -> f64 {
        self.length() / self.cells_per_side as f64
    }
}

/// Scenario-level description of one flower cluster, placed on a row face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowerSpec {
    pub id: u32,
    pub row: u32,
    pub side: Side,
    /// Distance along the row centerline from its start, meters.
    pub arclength: f64,
    /// Height above the floor, meters.
    pub height: f64,
    /// How far inside the face the cluster sits, meters.
    #[serde(default)]
    pub depth: f64,
    pub ready_time: f64,
    pub wilt_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotSpec {
    pub radius: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub start: Pose2,
}

impl Default for RobotSpec {
    fn default() -> Self {
        Self {
            radius: 0.25,
            v_max: 1.0,
            omega_max: 2.0,
            start: Pose2::new(0.6, 0.6, 0.0),
        }
    }
}

/// Per-step odometry noise (standard deviations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdometryNoise {
    pub sigma_trans: f64,
    pub sigma_rot: f64,
}

impl Default for OdometryNoise {
    fn default() -> Self {
        Self {
            sigma_trans: 0.002,
            sigma_rot: 0.001,
        }
    }
}

impl OdometryNoise {
    pub fn zero() -> Self {
        Self {
            sigma_trans: 0.0,
            sigma_rot: 0.0,
        }
    }
}

/// Planar range scanner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    pub beam_count: usize,
    pub fov: f64,
    pub max_range: f64,
    pub sigma_range: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            beam_count: 180,
            fov: TAU,
            max_range: 12.0,
            sigma_range: 0.005,
        }
    }
}

impl ScanSpec {
    /// Beam bearings relative to the sensor heading. A full-circle scanner
    /// spaces beams by `fov / n` starting at 0; a partial one spans
    /// `[-fov/2, fov/2]` inclusive.
    pub fn bearings(&self) -> Vec<f64> {
        let n = self.beam_count;
        match n {
            0 => Vec::new(),
            1 => vec![0.0],
            _ if self.fov >= TAU - 1e-9 => (0..n)
                .map(|i| crate::geometry::wrap_angle(i as f64 * TAU / n as f64))
                .collect(),
            _ => (0..n)
                .map(|i| -self.fov / 2.0 + i as f64 * self.fov / (n - 1) as f64)
                .collect(),
        }
    }
}

/// Long-range flower camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSpec {
    pub fov: f64,
    pub reliable_range: f64,
    pub detect_prob: f64,
    /// Mean number of spurious detections per frame.
    pub false_positive_rate: f64,
    /// Bearing noise on azimuth and elevation, radians.
    pub sigma_bearing: f64,
    /// Mounting height above the floor, meters.
    pub height: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            fov: PI,
            reliable_range: 2.5,
            detect_prob: 0.9,
            false_positive_rate: 0.0,
            sigma_bearing: 0.005,
            height: 1.0,
        }
    }
}
