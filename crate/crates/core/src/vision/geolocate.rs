//! Ray geolocation of detections onto row grid cells.

use nalgebra::Vector3;

use crate::geometry::Pose2;
use crate::world::{GridCellRef, RowGeometry, Side};

use super::VisionError;

/// Casts a camera-frame bearing (x forward, y left, z up) from a camera at
/// `pose` and returns the grid cell of the nearest row face it strikes.
///
/// Only faces seen from the front count. Row end caps block the ray. The
/// limit `max_range` applies to the 3D distance along the ray.
pub fn bearing_to_cell(
    pose: &Pose2,
    bearing: &Vector3<f64>,
    rows: &[RowGeometry],
    max_range: f64,
) -> Result<Option<GridCellRef>, VisionError> {
    let norm = bearing.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(VisionError::InvalidBearing(norm));
    }
    let horizontal = bearing.xy().norm();
    if horizontal < 1e-12 {
        return Ok(None);
    }
    let dir = crate::geometry::rotation(pose.theta) * (bearing.xy() / horizontal);
    let origin = pose.position();
    let max_t = max_range * horizontal;

    let mut best: Option<(f64, Option<GridCellRef>)> = None;
    for row in rows {
        for side in Side::BOTH {
            let face = row.face(side);
            let facing = row.face_normal(side).dot(&dir) < 0.0;
            if let Some(t) = face.ray_intersection(&origin, &dir) {
                if t <= max_t && best.is_none_or(|(b, _)| t < b) {
                    let cell = if facing {
                        let s = row.project(&(origin + dir * t)).clamp(0.0, row.length);
                        let index = row.grid_cell_of(s).unwrap_or(row.cells_per_side - 1);
                        Some(GridCellRef::new(row.id, side, index))
                    } else {
                        None
                    };
                    best = Some((t, cell));
                }
            }
        }
        let poly = row.polygon();
        for cap in [
            crate::geometry::Segment::new(poly[1], poly[2]),
            crate::geometry::Segment::new(poly[3], poly[0]),
        ] {
            if let Some(t) = cap.ray_intersection(&origin, &dir) {
                if t <= max_t && best.is_none_or(|(b, _)| t < b) {
                    best = Some((t, None));
                }
            }
        }
    }
    Ok(best.and_then(|(_, c)| c))
}
