//! Point-to-point ICP for planar scans.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Pose2};

use super::{PointIndex, SlamError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcpParams {
    pub max_iters: usize,
    /// Correspondence gate, meters.
    pub d_corr: f64,
    /// Convergence threshold on the change of mean squared error.
    pub tol: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iters: 50,
            d_corr: 0.3,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpResult {
    /// Maps source points into the target frame.
    pub transform: Pose2,
    /// Share of source points with a target point within `d_corr`.
    pub match_fraction: f64,
    /// RMS distance over matched points.
    pub rms_error: f64,
    pub iterations: usize,
}

/// Aligns `source` onto `target` starting from `init`.
pub fn icp_match(
    source: &[Point2],
    target: &[Point2],
    init: Pose2,
    params: &IcpParams,
) -> Result<IcpResult, SlamError> {
    if target.is_empty() {
        return Err(SlamError::Degenerate { correspondences: 0 });
    }
    let index = PointIndex::new(target, params.d_corr.max(1e-3));
    icp_match_indexed(source, &index, init, params)
}

/// [`icp_match`] against a prebuilt target index.
pub fn icp_match_indexed(
    source: &[Point2],
    target: &PointIndex,
    init: Pose2,
    params: &IcpParams,
) -> Result<IcpResult, SlamError> {
    if source.is_empty() || target.is_empty() {
        return Err(SlamError::Degenerate { correspondences: 0 });
    }
    let mut transform = init;
    let mut prev_cost: Option<f64> = None;
    let mut iterations = 0;
    let mut pairs: Vec<(Point2, Point2)> = Vec::with_capacity(source.len());
    while iterations < params.max_iters {
        iterations += 1;
        pairs.clear();
        for s in source {
            let moved = transform.transform_point(s);
            if let Some((j, _)) = target.nearest_within(&moved, params.d_corr) {
                pairs.push((*s, target.points()[j]));
            }
        }
        if pairs.len() < 3 {
            return Err(SlamError::Degenerate {
                correspondences: pairs.len(),
            });
        }
        transform = best_rigid_transform(&pairs);
        let cost = pairs
            .iter()
            .map(|(s, t)| (transform.transform_point(s) - t).norm_squared())
            .sum::<f64>()
            / pairs.len() as f64;
        if let Some(prev) = prev_cost {
            if (prev - cost).abs() < params.tol {
                break;
            }
        }
        prev_cost = Some(cost);
    }

    let mut matched = 0usize;
    let mut sq = 0.0;
    for s in source {
        let moved = transform.transform_point(s);
        if let Some((_, d)) = target.nearest_within(&moved, params.d_corr) {
            matched += 1;
            sq += d * d;
        }
    }
    Ok(IcpResult {
        transform,
        match_fraction: matched as f64 / source.len() as f64,
        rms_error: if matched > 0 {
            (sq / matched as f64).sqrt()
        } else {
            f64::INFINITY
        },
        iterations,
    })
}

/// Least-squares rigid transform taking each pair's first point onto its
/// second (the planar Kabsch/SVD solution in closed form).
pub fn best_rigid_transform(pairs: &[(Point2, Point2)]) -> Pose2 {
    let n = pairs.len() as f64;
    let (mut ms, mut mt) = (Vector2::zeros(), Vector2::zeros());
    for (s, t) in pairs {
        ms += s.coords;
        mt += t.coords;
    }
    ms /= n;
    mt /= n;
    let (mut sxx, mut sxy, mut syx, mut syy) = (0.0, 0.0, 0.0, 0.0);
    for (s, t) in pairs {
        let a = s.coords - ms;
        let b = t.coords - mt;
        sxx += a.x * b.x;
        sxy += a.x * b.y;
        syx += a.y * b.x;
        syy += a.y * b.y;
    }
    let theta = (sxy - syx).atan2(sxx + syy);
    let r = crate::geometry::rotation(theta);
    let t = mt - r * ms;
    Pose2::new(t.x, t.y, theta)
}

/// Match-fraction gate for accepting a scan alignment as a loop closure.
pub fn loop_closure_check(result: &IcpResult, threshold: f64) -> bool {
    result.match_fraction >= threshold
}
