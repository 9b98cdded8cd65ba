//! Global anchoring of a local map against the prior map of the room.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Pose2};

use super::icp::{icp_match_indexed, loop_closure_check, IcpParams, IcpResult};
use super::{PointIndex, SlamError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OffsetParams {
    /// Evenly spaced initial headings.
    pub n_starts: usize,
    /// Spacing of the coarse translation grid over the prior map, meters.
    pub grid_step: f64,
    /// Match-fraction threshold the best alignment must reach.
    pub threshold: f64,
    /// Iterations spent on every start before refining the best few.
    pub coarse_iters: usize,
    /// Number of best coarse starts refined to convergence.
    pub refine: usize,
    /// Local points used in the coarse stage (evenly strided subset).
    pub coarse_points: usize,
    pub icp: IcpParams,
}

impl Default for OffsetParams {
    fn default() -> Self {
        Self {
            n_starts: 12,
            grid_step: 1.0,
            threshold: 0.8,
            coarse_iters: 12,
            refine: 6,
            coarse_points: 300,
            icp: IcpParams {
                max_iters: 80,
                d_corr: 0.5,
                tol: 1e-12,
            },
        }
    }
}

/// Multi-start ICP search for the transform taking `local` into the prior
/// map frame.
///
/// Starts are every combination of `n_starts` headings and a translation
/// grid over the prior map's bounding box (placing the local centroid on each
/// grid node). Each start runs a short ICP; the best few are refined, and the
/// alignment with the highest match fraction wins if it passes the gate.
pub fn estimate_initial_offset(
    local: &[Point2],
    prior_map: &[Point2],
    params: &OffsetParams,
) -> Result<IcpResult, SlamError> {
    if prior_map.is_empty() {
        return Err(SlamError::NoAlignment { best_fraction: 0.0 });
    }
    if local.is_empty() {
        return Err(SlamError::NoAlignment { best_fraction: 0.0 });
    }
    let index = PointIndex::new(prior_map, params.icp.d_corr.max(1e-3));
    let (min, max) = bounds(prior_map);
    let centroid = mean(local);
    let prior_centroid = mean(prior_map);

    let nx = ((max.x - min.x) / params.grid_step).floor() as usize + 1;
    let ny = ((max.y - min.y) / params.grid_step).floor() as usize + 1;
    let ox = min.x + 0.5 * ((max.x - min.x) - (nx - 1) as f64 * params.grid_step);
    let oy = min.y + 0.5 * ((max.y - min.y) - (ny - 1) as f64 * params.grid_step);

    let stride = local.len().div_ceil(params.coarse_points.max(3));
    let sparse: Vec<Point2> = local.iter().step_by(stride.max(1)).copied().collect();
    let coarse = IcpParams {
        max_iters: params.coarse_iters.max(1),
        ..params.icp
    };
    let mut candidates: Vec<IcpResult> = Vec::new();
    for k in 0..params.n_starts.max(1) {
        let heading = k as f64 * TAU / params.n_starts.max(1) as f64;
        let rc = crate::geometry::rotation(heading) * centroid;
        // Grid nodes plus the prior map centroid, which is the right
        // placement when the local cloud covers the whole map.
        let nodes = (0..nx)
            .flat_map(|ix| (0..ny).map(move |iy| (ix, iy)))
            .map(|(ix, iy)| (ox + ix as f64 * params.grid_step, oy + iy as f64 * params.grid_step))
            .chain(std::iter::once((prior_centroid.x, prior_centroid.y)));
        for (gx, gy) in nodes {
            let init = Pose2::new(gx - rc.x, gy - rc.y, heading);
            if let Ok(r) = icp_match_indexed(&sparse, &index, init, &coarse) {
                candidates.push(r);
            }
        }
    }
    candidates.sort_by(|a, b| rank(b).partial_cmp(&rank(a)).unwrap_or(std::cmp::Ordering::Equal));

    let mut best: Option<IcpResult> = None;
    for c in candidates.iter().take(params.refine.max(1)) {
        let Ok(r) = icp_match_indexed(local, &index, c.transform, &params.icp) else {
            continue;
        };
        if best.is_none_or(|b| rank(&r) > rank(&b)) {
            best = Some(r);
        }
    }
    match best {
        Some(r) if loop_closure_check(&r, params.threshold) => Ok(r),
        Some(r) => Err(SlamError::NoAlignment {
            best_fraction: r.match_fraction,
        }),
        None => Err(SlamError::NoAlignment { best_fraction: 0.0 }),
    }
}

/// Higher is better: match fraction first, then lower RMS.
fn rank(r: &IcpResult) -> (f64, f64) {
    (r.match_fraction, -r.rms_error)
}

fn mean(points: &[Point2]) -> nalgebra::Vector2<f64> {
    points.iter().fold(nalgebra::Vector2::zeros(), |acc, p| acc + p.coords) / points.len() as f64
}

fn bounds(points: &[Point2]) -> (Point2, Point2) {
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    (min, max)
}
