//! Simulated odometry, planar range scans and long-range flower detections.
//!
//! Every function takes the random source explicitly so a run is a pure
//! function of its seed.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::geometry::{cast_ray, Point2, PointCloud2, Pose2, Segment};

use super::{CameraSpec, FlowerState, OdometryNoise, ScanSpec, World};

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sigma
}

/// Relative motion `prev⁻¹ ∘ curr` corrupted by zero-mean Gaussian noise.
pub fn simulate_odometry<R: Rng + ?Sized>(prev: &Pose2, curr: &Pose2, noise: &OdometryNoise, rng: &mut R) -> Pose2 {
    let rel = prev.between(curr);
    Pose2::new(
        rel.x + gaussian(rng, noise.sigma_trans),
        rel.y + gaussian(rng, noise.sigma_trans),
        rel.theta + gaussian(rng, noise.sigma_rot),
    )
}

/// Ray-cast range scan from `pose` against the walls and rows.
///
/// Misses (and noisy readings past `max_range`) read `max_range`.
pub fn simulate_scan<R: Rng + ?Sized>(world: &World, pose: &Pose2, spec: &ScanSpec, rng: &mut R) -> Vec<f64> {
    scan_segments(world.obstacles(), pose, spec, rng)
}

pub(crate) fn scan_segments<R: Rng + ?Sized>(
    segments: &[Segment],
    pose: &Pose2,
    spec: &ScanSpec,
    rng: &mut R,
) -> Vec<f64> {
    let origin = pose.position();
    spec.bearings()
        .into_iter()
        .map(|b| match cast_ray(&origin, pose.theta + b, segments, spec.max_range) {
            Some((t, _)) => {
                let noisy = t + gaussian(rng, spec.sigma_range);
                noisy.clamp(0.0, spec.max_range)
            }
            None => spec.max_range,
        })
        .collect()
}

/// Converts ranges to points in the sensor frame, dropping max-range readings.
pub fn scan_to_points(spec: &ScanSpec, ranges: &[f64]) -> PointCloud2 {
    spec.bearings()
        .into_iter()
        .zip(ranges)
        .filter(|(_, &r)| r < spec.max_range)
        .map(|(b, &r)| Point2::new(r * b.cos(), r * b.sin()))
        .collect()
}

/// A unit bearing in the camera frame (x forward, y left, z up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub bearing: Vector3<f64>,
    /// Ground-truth source, `None` for spurious detections. Planners never
    /// read this; it exists for evaluation.
    pub source: Option<u32>,
}

fn bearing_from_angles(azimuth: f64, elevation: f64) -> Vector3<f64> {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vector3::new(ce * ca, ce * sa, se)
}

/// Simulated long-range flower camera at `pose`.
///
/// Every non-wilted cluster within `reliable_range` and inside the horizontal
/// field of view, with a clear line of sight to its row face, is reported with
/// probability `detect_prob` as a noisy unit bearing. Spurious bearings are
/// added at a Poisson rate per frame.
pub fn simulate_cluster_detections<R: Rng + ?Sized>(
    world: &World,
    pose: &Pose2,
    camera: &CameraSpec,
    rng: &mut R,
) -> Vec<DetectionEvent> {
    let origin = pose.position();
    let mut events = Vec::new();
    for flower in world.flowers() {
        if flower.state() == FlowerState::Wilted {
            continue;
        }
        let local = pose.inverse_transform_point(&Point2::new(flower.position.x, flower.position.y));
        let rel = Vector3::new(local.x, local.y, flower.position.z - camera.height);
        let dist = rel.norm();
        if dist > camera.reliable_range || dist == 0.0 {
            continue;
        }
        let azimuth = rel.y.atan2(rel.x);
        if azimuth.abs() > camera.fov / 2.0 {
            continue;
        }
        if !line_of_sight(world, &origin, flower.cell, flower.position) {
            continue;
        }
        let detected = rng.random::<f64>() < camera.detect_prob;
        if !detected {
            continue;
        }
        let elevation = rel.z.atan2(rel.x.hypot(rel.y));
        let az = azimuth + gaussian(rng, camera.sigma_bearing);
        let el = elevation + gaussian(rng, camera.sigma_bearing);
        events.push(DetectionEvent {
            bearing: bearing_from_angles(az, el),
            source: Some(flower.id),
        });
    }
    if camera.false_positive_rate > 0.0 {
        let n = Poisson::new(camera.false_positive_rate)
            .map(|d| d.sample(rng) as usize)
            .unwrap_or(0);
        for _ in 0..n {
            let az = (rng.random::<f64>() - 0.5) * camera.fov;
            let el = (rng.random::<f64>() - 0.5) * 0.6;
            events.push(DetectionEvent {
                bearing: bearing_from_angles(az, el),
                source: None,
            });
        }
    }
    events
}

/// Horizontal line of sight from the camera to the face point in front of a
/// flower.
fn line_of_sight(world: &World, origin: &Point2, cell: super::GridCellRef, position: crate::geometry::Point3) -> bool {
    let Some(row) = world.row(cell.row_id) else {
        return false;
    };
    let p = Point2::new(position.x, position.y);
    let target = row.face_point(cell.side, row.project(&p).clamp(0.0, row.length));
    let d = target - origin;
    // Stop just short of the face so the face itself does not occlude.
    let sight = Segment::new(*origin, origin + d * (1.0 - 1e-6));
    !world.obstacles().iter().any(|s| s.intersects(&sight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{FlowerSpec, PlantRow, Side, WorldConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn noiseless_odometry_is_exact() {
        let prev = Pose2::new(1.0, 2.0, 0.3);
        let curr = Pose2::new(1.5, 2.2, 0.5);
        let rel = simulate_odometry(&prev, &curr, &OdometryNoise::zero(), &mut rng());
        let back = prev.compose(&rel);
        assert!((back.x - curr.x).abs() < 1e-12 && (back.y - curr.y).abs() < 1e-12);
        let id = simulate_odometry(&prev, &prev, &OdometryNoise::zero(), &mut rng());
        assert!(id.x.abs() < 1e-12 && id.y.abs() < 1e-12 && id.theta.abs() < 1e-12);
    }

    #[test]
    fn odometry_is_reproducible() {
        let noise = OdometryNoise {
            sigma_trans: 0.05,
            sigma_rot: 0.02,
        };
        let prev = Pose2::identity();
        let curr = Pose2::new(0.3, 0.0, 0.1);
        let mut a = rng();
        let mut b = a.clone();
        assert_eq!(
            simulate_odometry(&prev, &curr, &noise, &mut a),
            simulate_odometry(&prev, &curr, &noise, &mut b)
        );
    }

    fn scan_world() -> World {
        let mut cfg = WorldConfig::empty_room(6.0, 6.0, 3);
        cfg.robot.start = Pose2::new(3.0, 3.0, 0.0);
        World::build(cfg).unwrap()
    }

    #[test]
    fn center_beam_hits_wall() {
        let world = scan_world();
        let spec = ScanSpec {
            beam_count: 31,
            fov: PI,
            max_range: 10.0,
            sigma_range: 0.0,
        };
        let ranges = simulate_scan(&world, &Pose2::new(3.0, 3.0, 0.0), &spec, &mut rng());
        assert!((ranges[15] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn beam_stops_at_row_before_wall() {
        let mut cfg = WorldConfig::empty_room(8.0, 6.0, 3);
        cfg.rows.push(PlantRow::along_x(0, 3.0, 3.0));
        cfg.robot.start = Pose2::new(1.0, 3.0, 0.0);
        let world = World::build(cfg).unwrap();
        let spec = ScanSpec {
            beam_count: 1,
            fov: 0.0,
            max_range: 10.0,
            sigma_range: 0.0,
        };
        let r = simulate_scan(&world, &Pose2::new(1.0, 2.9, 0.0), &spec, &mut rng());
        // The row's near end cap spans x = 3.0 for y in [2.7, 3.3].
        assert!((r[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn doorway_beam_reads_max_range() {
        let mut cfg = WorldConfig::empty_room(6.0, 6.0, 3);
        cfg.doorways.push(crate::world::Doorway {
            wall: crate::world::Wall::East,
            from: 2.0,
            to: 4.0,
        });
        cfg.robot.start = Pose2::new(3.0, 3.0, 0.0);
        let world = World::build(cfg).unwrap();
        let spec = ScanSpec {
            beam_count: 1,
            fov: 0.0,
            max_range: 5.0,
            sigma_range: 0.0,
        };
        let r = simulate_scan(&world, &Pose2::new(3.0, 3.0, 0.0), &spec, &mut rng());
        assert_eq!(r[0], 5.0);
        assert!(scan_to_points(&spec, &r).is_empty());
    }

    fn flower_world(ready_time: f64, arclength: f64) -> World {
        let mut cfg = WorldConfig::empty_room(8.0, 6.0, 3);
        cfg.rows.push(PlantRow::along_x(0, 2.0, 3.0));
        cfg.flowers.push(FlowerSpec {
            id: 1,
            row: 0,
            side: Side::Right,
            arclength,
            height: 1.0,
            depth: 0.0,
            ready_time,
            wilt_time: 1e6,
        });
        cfg.robot.start = Pose2::new(2.0 + arclength, 1.7, PI / 2.0);
        World::build(cfg).unwrap()
    }

    fn ideal_camera() -> CameraSpec {
        CameraSpec {
            detect_prob: 1.0,
            sigma_bearing: 0.0,
            false_positive_rate: 0.0,
            ..CameraSpec::default()
        }
    }

    #[test]
    fn aligned_cluster_bearing_is_forward() {
        // Face at y = 2.7, robot at y = 1.7 facing +y: 1 m straight ahead.
        let world = flower_world(0.0, 1.0);
        let pose = world.robot().pose;
        let events = simulate_cluster_detections(&world, &pose, &ideal_camera(), &mut rng());
        assert_eq!(events.len(), 1);
        let b = events[0].bearing;
        assert!((b.x - 1.0).abs() < 1e-12 && b.y.abs() < 1e-12 && b.z.abs() < 1e-12);
    }

    #[test]
    fn out_of_range_cluster_is_not_seen() {
        let world = flower_world(0.0, 1.0);
        let pose = Pose2::new(3.0, 0.1, PI / 2.0);
        // 2.6 m away with a 2.5 m reliable range.
        let events = simulate_cluster_detections(&world, &pose, &ideal_camera(), &mut rng());
        assert!(events.is_empty());
        let mut wide = ideal_camera();
        wide.reliable_range = 2.7;
        assert_eq!(simulate_cluster_detections(&world, &pose, &wide, &mut rng()).len(), 1);
    }

    #[test]
    fn empty_view_without_false_positives() {
        let world = scan_world();
        let pose = world.robot().pose;
        assert!(simulate_cluster_detections(&world, &pose, &ideal_camera(), &mut rng()).is_empty());
        let mut noisy = ideal_camera();
        noisy.false_positive_rate = 3.0;
        let n: usize = (0..200)
            .map(|s| {
                let mut r = ChaCha8Rng::seed_from_u64(s);
                simulate_cluster_detections(&world, &pose, &noisy, &mut r).len()
            })
            .sum();
        let mean = n as f64 / 200.0;
        assert!((mean - 3.0).abs() < 0.5, "mean {mean}");
    }

    #[test]
    fn far_face_is_occluded_by_its_row() {
        let mut cfg = WorldConfig::empty_room(8.0, 6.0, 3);
        cfg.rows.push(PlantRow::along_x(0, 2.0, 3.0));
        cfg.flowers.push(FlowerSpec {
            id: 1,
            row: 0,
            side: Side::Left,
            arclength: 1.0,
            height: 1.0,
            depth: 0.0,
            ready_time: 0.0,
            wilt_time: 1e6,
        });
        let world = World::build(cfg).unwrap();
        let pose = Pose2::new(3.0, 1.7, PI / 2.0);
        assert!(simulate_cluster_detections(&world, &pose, &ideal_camera(), &mut rng()).is_empty());
    }
}
