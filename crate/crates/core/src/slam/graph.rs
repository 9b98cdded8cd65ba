//! Pose graph with relative odometry factors and unary global anchors.
//!
//! Residuals are whitened by the upper Cholesky factor of each information
//! matrix so that the squared norm of the stacked residual is the negative
//! log-likelihood up to a constant.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::geometry::{wrap_angle, Pose2};

use super::SlamError;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct OdometryFactor {
    pub from: NodeId,
    pub to: NodeId,
    /// Pose of `to` in the frame of `from`.
    pub measurement: Pose2,
    pub information: Matrix3<f64>,
}

/// Global-frame observation of one node's pose.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorFactor {
    pub node: NodeId,
    pub measurement: Pose2,
    pub information: Matrix3<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FactorGraph {
    num_nodes: usize,
    odometry: Vec<OdometryFactor>,
    anchors: Vec<AnchorFactor>,
}

/// Diagonal information from standard deviations.
pub fn diagonal_information(sigma_x: f64, sigma_y: f64, sigma_theta: f64) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(
        1.0 / (sigma_x * sigma_x),
        1.0 / (sigma_y * sigma_y),
        1.0 / (sigma_theta * sigma_theta),
    ))
}

fn whitening(information: &Matrix3<f64>) -> Result<Matrix3<f64>, SlamError> {
    let sym = (information - information.transpose()).abs().max();
    if sym > 1e-9 * information.abs().max().max(1.0) {
        return Err(SlamError::InvalidFactor("information matrix is not symmetric".into()));
    }
    let chol = information
        .cholesky()
        .ok_or_else(|| SlamError::InvalidFactor("information matrix is not positive definite".into()))?;
    Ok(chol.l().transpose())
}

impl FactorGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_nodes(n: usize) -> Self {
        Self {
            num_nodes: n,
            ..Self::default()
        }
    }

    pub fn add_node(&mut self) -> NodeId {
        self.num_nodes += 1;
        self.num_nodes - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn odometry(&self) -> &[OdometryFactor] {
        &self.odometry
    }

    pub fn anchors(&self) -> &[AnchorFactor] {
        &self.anchors
    }

    pub fn num_factors(&self) -> usize {
        self.odometry.len() + self.anchors.len()
    }

    pub fn add_odometry(
        &mut self,
        from: NodeId,
        to: NodeId,
        measurement: Pose2,
        information: Matrix3<f64>,
    ) -> Result<(), SlamError> {
        if from == to || from >= self.num_nodes || to >= self.num_nodes {
            return Err(SlamError::InvalidFactor(format!(
                "odometry factor {from} -> {to} with {} nodes",
                self.num_nodes
            )));
        }
        whitening(&information)?;
        self.odometry.push(OdometryFactor {
            from,
            to,
            measurement,
            information,
        });
        Ok(())
    }

    pub fn add_anchor(&mut self, node: NodeId, measurement: Pose2, information: Matrix3<f64>) -> Result<(), SlamError> {
        if node >= self.num_nodes {
            return Err(SlamError::InvalidFactor(format!(
                "anchor on node {node} with {} nodes",
                self.num_nodes
            )));
        }
        whitening(&information)?;
        self.anchors.push(AnchorFactor {
            node,
            measurement,
            information,
        });
        Ok(())
    }

    /// Checks that every node is connected through odometry to an anchored
    /// node, which fixes the gauge.
    pub fn check_gauge(&self) -> Result<(), SlamError> {
        if self.anchors.is_empty() {
            return Err(SlamError::NoAnchor);
        }
        let mut parent: Vec<usize> = (0..self.num_nodes).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for f in &self.odometry {
            let (a, b) = (find(&mut parent, f.from), find(&mut parent, f.to));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut anchored = vec![false; self.num_nodes];
        for a in &self.anchors {
            let root = find(&mut parent, a.node);
            anchored[root] = true;
        }
        for i in 0..self.num_nodes {
            let root = find(&mut parent, i);
            if !anchored[root] {
                return Err(SlamError::SingularSystem(format!(
                    "node {i} is not connected to any anchor"
                )));
            }
        }
        Ok(())
    }
}

/// Block-sparse Jacobian: 3×3 blocks indexed by (factor, node).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseJacobian {
    pub num_factors: usize,
    pub num_nodes: usize,
    pub blocks: Vec<(usize, NodeId, Matrix3<f64>)>,
}

impl SparseJacobian {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(3 * self.num_factors, 3 * self.num_nodes);
        for (f, n, b) in &self.blocks {
            m.view_mut((3 * f, 3 * n), (3, 3)).copy_from(b);
        }
        m
    }
}

/// Unwhitened error of an odometry factor and its Jacobians with respect to
/// the `from` and `to` poses.
pub(crate) fn odometry_error(xi: &Pose2, xj: &Pose2, z: &Pose2) -> (Vector3<f64>, Matrix3<f64>, Matrix3<f64>) {
    let (si, ci) = xi.theta.sin_cos();
    let (sz, cz) = z.theta.sin_cos();
    let dx = xj.x - xi.x;
    let dy = xj.y - xi.y;
    // Relative translation in the frame of xi.
    let px = ci * dx + si * dy;
    let py = -si * dx + ci * dy;
    let qx = px - z.x;
    let qy = py - z.y;
    let e = Vector3::new(
        cz * qx + sz * qy,
        -sz * qx + cz * qy,
        wrap_angle(xj.theta - xi.theta - z.theta),
    );
    // d(p)/d(theta_i)
    let dpx = -si * dx + ci * dy;
    let dpy = -ci * dx - si * dy;
    let rz_t = nalgebra::Matrix2::new(cz, sz, -sz, cz);
    let ri_t = nalgebra::Matrix2::new(ci, si, -si, ci);
    let a = rz_t * ri_t;
    let dth = rz_t * nalgebra::Vector2::new(dpx, dpy);
    let ji = Matrix3::new(
        -a[(0, 0)],
        -a[(0, 1)],
        dth.x,
        -a[(1, 0)],
        -a[(1, 1)],
        dth.y,
        0.0,
        0.0,
        -1.0,
    );
    let jj = Matrix3::new(a[(0, 0)], a[(0, 1)], 0.0, a[(1, 0)], a[(1, 1)], 0.0, 0.0, 0.0, 1.0);
    (e, ji, jj)
}

pub(crate) fn anchor_error(x: &Pose2, z: &Pose2) -> Vector3<f64> {
    Vector3::new(x.x - z.x, x.y - z.y, wrap_angle(x.theta - z.theta))
}

/// Stacked whitened residual (odometry factors first, then anchors) and its
/// analytic block-sparse Jacobian.
pub fn graph_residual(graph: &FactorGraph, estimate: &[Pose2]) -> Result<(DVector<f64>, SparseJacobian), SlamError> {
    if estimate.len() != graph.num_nodes {
        return Err(SlamError::EstimateMismatch {
            expected: graph.num_nodes,
            got: estimate.len(),
        });
    }
    let nf = graph.num_factors();
    let mut r = DVector::zeros(3 * nf);
    let mut blocks = Vec::with_capacity(2 * graph.odometry.len() + graph.anchors.len());
    for (k, f) in graph.odometry.iter().enumerate() {
        let w = whitening(&f.information)?;
        let (e, ji, jj) = odometry_error(&estimate[f.from], &estimate[f.to], &f.measurement);
        r.fixed_rows_mut::<3>(3 * k).copy_from(&(w * e));
        blocks.push((k, f.from, w * ji));
        blocks.push((k, f.to, w * jj));
    }
    let base = graph.odometry.len();
    for (k, a) in graph.anchors.iter().enumerate() {
        let w = whitening(&a.information)?;
        let e = anchor_error(&estimate[a.node], &a.measurement);
        r.fixed_rows_mut::<3>(3 * (base + k)).copy_from(&(w * e));
        blocks.push((base + k, a.node, w));
    }
    Ok((
        r,
        SparseJacobian {
            num_factors: nf,
            num_nodes: graph.num_nodes,
            blocks,
        },
    ))
}

/// Sum of squared whitened residuals.
pub fn graph_cost(graph: &FactorGraph, estimate: &[Pose2]) -> Result<f64, SlamError> {
    graph_residual(graph, estimate).map(|(r, _)| r.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistent_graph_has_zero_residual() {
        let poses = [
            Pose2::new(0.0, 0.0, 0.0),
            Pose2::new(1.0, 0.5, 0.4),
            Pose2::new(1.7, 1.5, 1.9),
        ];
        let mut g = FactorGraph::with_nodes(3);
        g.add_anchor(0, poses[0], Matrix3::identity()).unwrap();
        for i in 0..2 {
            g.add_odometry(i, i + 1, poses[i].between(&poses[i + 1]), Matrix3::identity())
                .unwrap();
        }
        let (r, _) = graph_residual(&g, &poses).unwrap();
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn anchor_residual_reads_offset() {
        let mut g = FactorGraph::with_nodes(1);
        g.add_anchor(0, Pose2::identity(), Matrix3::identity()).unwrap();
        let (r, _) = graph_residual(&g, &[Pose2::new(0.1, 0.0, 0.0)]).unwrap();
        assert!((r[0] - 0.1).abs() < 1e-15 && r[1] == 0.0 && r[2] == 0.0);
    }

    #[test]
    fn rejects_bad_factors() {
        let mut g = FactorGraph::with_nodes(2);
        assert!(g.add_odometry(0, 0, Pose2::identity(), Matrix3::identity()).is_err());
        assert!(g.add_odometry(0, 2, Pose2::identity(), Matrix3::identity()).is_err());
        let mut not_spd = Matrix3::identity();
        not_spd[(2, 2)] = -1.0;
        assert!(g.add_anchor(0, Pose2::identity(), not_spd).is_err());
        let mut asym = Matrix3::identity();
        asym[(0, 1)] = 0.5;
        assert!(g.add_anchor(0, Pose2::identity(), asym).is_err());
    }

    #[test]
    fn gauge_requires_connected_anchor() {
        let mut g = FactorGraph::with_nodes(3);
        assert_eq!(g.check_gauge(), Err(SlamError::NoAnchor));
        g.add_anchor(0, Pose2::identity(), Matrix3::identity()).unwrap();
        g.add_odometry(0, 1, Pose2::identity(), Matrix3::identity()).unwrap();
        assert!(matches!(g.check_gauge(), Err(SlamError::SingularSystem(_))));
        g.add_odometry(1, 2, Pose2::identity(), Matrix3::identity()).unwrap();
        assert!(g.check_gauge().is_ok());
    }
}
