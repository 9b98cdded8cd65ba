//! Keyframe pose-graph estimator fed by odometry and scans.

use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Pose2};

use super::anchor::{estimate_initial_offset, OffsetParams};
use super::graph::{diagonal_information, FactorGraph, NodeId};
use super::icp::{icp_match_indexed, loop_closure_check, IcpParams};
use super::lm::{optimize_lm, LmParams};
use super::{PointIndex, SlamError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlamParams {
    /// Translation since the last keyframe that triggers a new one, meters.
    pub keyframe_distance: f64,
    /// Rotation since the last keyframe that triggers a new one, radians.
    pub keyframe_angle: f64,
    /// Match-fraction gate for turning a scan alignment into an anchor.
    pub loop_threshold: f64,
    /// Spacing of the points sampled along the prior map geometry.
    pub prior_spacing: f64,
    /// Odometry noise model assumed by the estimator, per step.
    pub odom_sigma_trans: f64,
    pub odom_sigma_rot: f64,
    /// Standard deviations of an accepted scan-to-map anchor.
    pub anchor_sigma_trans: f64,
    pub anchor_sigma_rot: f64,
    pub icp: IcpParams,
    pub lm: LmParams,
    pub offset: OffsetParams,
}

impl Default for SlamParams {
    fn default() -> Self {
        Self {
            keyframe_distance: 0.25,
            keyframe_angle: 10f64.to_radians(),
            loop_threshold: 0.8,
            prior_spacing: 0.02,
            odom_sigma_trans: 0.002,
            odom_sigma_rot: 0.001,
            anchor_sigma_trans: 0.01,
            anchor_sigma_rot: 0.005,
            icp: IcpParams {
                max_iters: 30,
                d_corr: 0.3,
                tol: 1e-10,
            },
            lm: LmParams::default(),
            offset: OffsetParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyframeReport {
    pub node: NodeId,
    pub match_fraction: Option<f64>,
    pub anchored: bool,
}

/// Batch pose-graph SLAM against a known prior map.
///
/// Odometry accumulates between keyframes. Each keyframe adds a node, an
/// odometry factor, and (when the scan aligns with the prior map well enough)
/// a global anchor; the whole graph is then re-solved.
#[derive(Debug, Clone)]
pub struct PoseGraphEstimator {
    params: SlamParams,
    prior: PointIndex,
    graph: FactorGraph,
    poses: Vec<Pose2>,
    pending: Pose2,
    pending_steps: usize,
    anchors: usize,
}

impl PoseGraphEstimator {
    pub fn new(prior_map: &[Point2], params: SlamParams) -> Self {
        Self {
            prior: PointIndex::new(prior_map, params.icp.d_corr.max(1e-3)),
            params,
            graph: FactorGraph::new(),
            poses: Vec::new(),
            pending: Pose2::identity(),
            pending_steps: 0,
            anchors: 0,
        }
    }

    pub fn params(&self) -> &SlamParams {
        &self.params
    }

    pub fn is_initialized(&self) -> bool {
        !self.poses.is_empty()
    }

    /// Locates the robot in the prior map from a single scan (robot-frame
    /// points) and creates the first, anchored node.
    pub fn initialize_from_scan(&mut self, scan: &[Point2]) -> Result<Pose2, SlamError> {
        let r = estimate_initial_offset(scan, self.prior.points(), &self.params.offset)?;
        self.initialize_at(r.transform)?;
        Ok(r.transform)
    }

    /// Starts the graph at a given global pose.
    pub fn initialize_at(&mut self, pose: Pose2) -> Result<(), SlamError> {
        self.graph = FactorGraph::with_nodes(1);
        self.graph.add_anchor(0, pose, self.anchor_information())?;
        self.poses = vec![pose];
        self.pending = Pose2::identity();
        self.pending_steps = 0;
        self.anchors = 1;
        Ok(())
    }

    /// Accumulates one relative odometry measurement.
    pub fn predict(&mut self, odom: &Pose2) {
        self.pending = self.pending.compose(odom);
        self.pending_steps += 1;
    }

    /// Current pose estimate: last keyframe composed with pending odometry.
    pub fn pose(&self) -> Pose2 {
        self.poses
            .last()
            .map(|p| p.compose(&self.pending))
            .unwrap_or(self.pending)
    }

    pub fn keyframe_due(&self) -> bool {
        self.pending.translation().norm() >= self.params.keyframe_distance
            || self.pending.theta.abs() >= self.params.keyframe_angle
    }

    /// Adds a keyframe at the current estimate, tries to anchor it with
    /// `scan` (robot-frame points) and re-optimizes the graph.
    pub fn add_keyframe(&mut self, scan: &[Point2]) -> Result<KeyframeReport, SlamError> {
        if !self.is_initialized() {
            return Err(SlamError::NoAnchor);
        }
        let predicted = self.pose();
        let prev = self.poses.len() - 1;
        let node = self.graph.add_node();
        let info = self.odometry_information(self.pending_steps.max(1));
        self.graph.add_odometry(prev, node, self.pending, info)?;
        self.poses.push(predicted);
        self.pending = Pose2::identity();
        self.pending_steps = 0;

        let mut report = KeyframeReport {
            node,
            match_fraction: None,
            anchored: false,
        };
        if let Ok(r) = icp_match_indexed(scan, &self.prior, predicted, &self.params.icp) {
            report.match_fraction = Some(r.match_fraction);
            if loop_closure_check(&r, self.params.loop_threshold) {
                self.graph.add_anchor(node, r.transform, self.anchor_information())?;
                self.anchors += 1;
                report.anchored = true;
            }
        }
        let solved = optimize_lm(&self.graph, &self.poses, &self.params.lm)?;
        self.poses = solved.poses;
        Ok(report)
    }

    pub fn keyframe_poses(&self) -> &[Pose2] {
        &self.poses
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors
    }

    fn odometry_information(&self, steps: usize) -> nalgebra::Matrix3<f64> {
        let k = (steps as f64).sqrt();
        diagonal_information(
            (self.params.odom_sigma_trans * k).max(1e-4),
            (self.params.odom_sigma_trans * k).max(1e-4),
            (self.params.odom_sigma_rot * k).max(1e-5),
        )
    }

    fn anchor_information(&self) -> nalgebra::Matrix3<f64> {
        diagonal_information(
            self.params.anchor_sigma_trans.max(1e-6),
            self.params.anchor_sigma_trans.max(1e-6),
            self.params.anchor_sigma_rot.max(1e-6),
        )
    }
}
