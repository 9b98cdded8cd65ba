//! Planar 3R chain on a yawing base.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Point3, Pose2};

use super::ArmError;

/// Where the arm's shoulder sits on the drive base, in the robot frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmMount {
    pub forward: f64,
    pub lateral: f64,
    pub height: f64,
}

impl Default for ArmMount {
    fn default() -> Self {
        Self {
            forward: 0.15,
            lateral: 0.0,
            height: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmSpec {
    pub lengths: [f64; 3],
    /// `(min, max)` for yaw, q1, q2, q3.
    pub limits: [(f64, f64); 4],
    pub mount: ArmMount,
}

impl Default for ArmSpec {
    fn default() -> Self {
        use std::f64::consts::FRAC_PI_2;
        Self {
            lengths: [0.28, 0.28, 0.15],
            limits: [
                (-FRAC_PI_2, FRAC_PI_2),
                (-FRAC_PI_2, FRAC_PI_2),
                (-2.6, 2.6),
                (-2.6, 2.6),
            ],
            mount: ArmMount::default(),
        }
    }
}

impl ArmSpec {
    pub fn reach(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn validate(&self) -> Result<(), ArmError> {
        if !self.lengths.iter().all(|l| *l > 0.0 && l.is_finite()) {
            return Err(ArmError::InvalidSpec("link lengths must be positive".into()));
        }
        if !self.limits.iter().all(|(lo, hi)| lo <= hi) {
            return Err(ArmError::InvalidSpec("joint limits must satisfy min <= max".into()));
        }
        Ok(())
    }

    /// Clamps every joint into its limits.
    pub fn clamp(&self, q: &JointConfig) -> JointConfig {
        let a = q.to_array();
        JointConfig::from_array(std::array::from_fn(|i| a[i].clamp(self.limits[i].0, self.limits[i].1)))
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.to_array()
            .iter()
            .zip(&self.limits)
            .all(|(v, (lo, hi))| (lo - 1e-12..=hi + 1e-12).contains(v))
    }

    /// Shoulder position in the world for a base at `robot`.
    pub fn shoulder(&self, robot: &Pose2) -> Point3 {
        let p = robot.transform_point(&crate::geometry::Point2::new(self.mount.forward, self.mount.lateral));
        Point3::new(p.x, p.y, self.mount.height)
    }
}

/// Base yaw (relative to the robot heading) and the three planar joints.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointConfig {
    pub yaw: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl JointConfig {
    pub fn new(yaw: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Self { yaw, q1, q2, q3 }
    }

    /// Planar joints only, yaw zero.
    pub fn planar(q1: f64, q2: f64, q3: f64) -> Self {
        Self::new(0.0, q1, q2, q3)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.yaw, self.q1, self.q2, self.q3]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// Unweighted Euclidean joint-space distance.
    pub fn distance(&self, other: &JointConfig) -> f64 {
        let (a, b) = (self.to_array(), other.to_array());
        a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }
}

/// Tip position and orientation in the arm's working plane: `x` along the
/// yawed approach axis, `z` up from the shoulder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipPose {
    pub x: f64,
    pub z: f64,
    pub phi: f64,
}

/// Planar target; the orientation is left free when `phi` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkTarget {
    pub x: f64,
    pub z: f64,
    pub phi: Option<f64>,
}

impl IkTarget {
    pub fn position(x: f64, z: f64) -> Self {
        Self { x, z, phi: None }
    }

    pub fn pose(x: f64, z: f64, phi: f64) -> Self {
        Self { x, z, phi: Some(phi) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IkParams {
    pub damping: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for IkParams {
    fn default() -> Self {
        Self {
            damping: 0.05,
            max_iterations: 200,
            tolerance: 1e-4,
        }
    }
}

/// Cumulative-angle planar chain.
pub fn fk(arm: &ArmSpec, q: &JointConfig) -> TipPose {
    let [l1, l2, l3] = arm.lengths;
    let a1 = q.q1;
    let a2 = a1 + q.q2;
    let a3 = a2 + q.q3;
    TipPose {
        x: l1 * a1.cos() + l2 * a2.cos() + l3 * a3.cos(),
        z: l1 * a1.sin() + l2 * a2.sin() + l3 * a3.sin(),
        phi: a3,
    }
}

/// Tip position in the world for a base at `robot`.
pub fn tip_position(arm: &ArmSpec, robot: &Pose2, q: &JointConfig) -> Point3 {
    let tip = fk(arm, q);
    let heading = robot.theta + q.yaw;
    let s = arm.shoulder(robot);
    Point3::new(s.x + tip.x * heading.cos(), s.y + tip.x * heading.sin(), s.z + tip.z)
}

fn jacobian(arm: &ArmSpec, q: &JointConfig) -> Matrix3<f64> {
    let [l1, l2, l3] = arm.lengths;
    let a1 = q.q1;
    let a2 = a1 + q.q2;
    let a3 = a2 + q.q3;
    let (s1, s2, s3) = (l1 * a1.sin(), l2 * a2.sin(), l3 * a3.sin());
    let (c1, c2, c3) = (l1 * a1.cos(), l2 * a2.cos(), l3 * a3.cos());
    Matrix3::new(
        -(s1 + s2 + s3),
        -(s2 + s3),
        -s3,
        c1 + c2 + c3,
        c2 + c3,
        c3,
        1.0,
        1.0,
        1.0,
    )
}

/// Fallback starts, tried in order when the caller's seed stalls. Folded
/// elbows cover targets close to the shoulder.
const RESTARTS: [[f64; 3]; 9] = [
    [0.0, 0.0, 0.0],
    [0.0, 1.5, 1.5],
    [0.0, -1.5, -1.5],
    [-1.2, 2.4, 1.6],
    [1.2, -2.4, -1.6],
    [-1.2, -2.4, -1.0],
    [1.2, 2.4, 1.0],
    [1.5, 1.5, 0.0],
    [-1.5, -1.5, 0.0],
];

/// Damped least squares from `seed`, projecting onto the joint limits after
/// every step. If the seed stalls, a fixed list of restarts is tried, each
/// with the full iteration budget. Yaw is carried over from the seed.
pub fn ik(arm: &ArmSpec, target: &IkTarget, seed: &JointConfig, params: &IkParams) -> Result<JointConfig, ArmError> {
    let dist = target.x.hypot(target.z);
    if dist > arm.reach() {
        return Err(ArmError::Unreachable {
            distance: dist,
            reach: arm.reach(),
        });
    }
    if let Some(q) = dls(arm, target, seed, params)? {
        return Ok(q);
    }
    for [q1, q2, q3] in RESTARTS {
        if let Some(q) = dls(arm, target, &JointConfig::new(seed.yaw, q1, q2, q3), params)? {
            return Ok(q);
        }
    }
    Err(ArmError::NoConvergence)
}

fn dls(
    arm: &ArmSpec,
    target: &IkTarget,
    seed: &JointConfig,
    params: &IkParams,
) -> Result<Option<JointConfig>, ArmError> {
    let lambda2 = params.damping * params.damping;
    let mut q = arm.clamp(seed);
    for _ in 0..=params.max_iterations {
        let tip = fk(arm, &q);
        let ep = Vector2::new(target.x - tip.x, target.z - tip.z);
        let ephi = target.phi.map(|phi| wrap_angle(phi - tip.phi));
        if ep.norm() < params.tolerance && ephi.is_none_or(|e| e.abs() < params.tolerance) {
            return Ok(Some(q));
        }
        let j = jacobian(arm, &q);
        let dq = match ephi {
            Some(e) => {
                let jjt = j * j.transpose() + Matrix3::identity() * lambda2;
                let y = jjt
                    .lu()
                    .solve(&Vector3::new(ep.x, ep.y, e))
                    .ok_or(ArmError::NoConvergence)?;
                j.transpose() * y
            }
            None => {
                let jp = j.fixed_rows::<2>(0).into_owned();
                let jjt = jp * jp.transpose() + Matrix2::identity() * lambda2;
                let y = jjt.lu().solve(&ep).ok_or(ArmError::NoConvergence)?;
                jp.transpose() * y
            }
        };
        q = arm.clamp(&JointConfig::new(q.yaw, q.q1 + dq[0], q.q2 + dq[1], q.q3 + dq[2]));
    }
    Ok(None)
}

/// Joint configuration placing the tip on a world point: yaw turns the
/// working plane through the target, then planar IK with free orientation.
/// The plane can face the target or face away from it with the chain reaching
/// back over the shoulder; the first solvable option within the yaw limits wins.
pub fn ik_point(
    arm: &ArmSpec,
    robot: &Pose2,
    target: &Point3,
    seed: &JointConfig,
    params: &IkParams,
) -> Result<JointConfig, ArmError> {
    let s = arm.shoulder(robot);
    let (dx, dy, dz) = (target.x - s.x, target.y - s.y, target.z - s.z);
    let r = dx.hypot(dy);
    let dist = (r * r + dz * dz).sqrt();
    if dist > arm.reach() {
        return Err(ArmError::Unreachable {
            distance: dist,
            reach: arm.reach(),
        });
    }
    let bearing = if r > 1e-12 {
        wrap_angle(dy.atan2(dx) - robot.theta)
    } else {
        seed.yaw
    };
    let (lo, hi) = arm.limits[0];
    let mut result = Err(ArmError::YawLimit(bearing));
    for (yaw, x) in [(bearing, r), (wrap_angle(bearing + std::f64::consts::PI), -r)] {
        if !(lo..=hi).contains(&yaw) {
            continue;
        }
        let seed = JointConfig { yaw, ..*seed };
        result = ik(arm, &IkTarget::position(x, dz), &seed, params);
        if result.is_ok() {
            break;
        }
    }
    result
}
