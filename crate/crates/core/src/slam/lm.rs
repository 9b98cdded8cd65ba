//! Batch Levenberg-Marquardt over the pose graph.
//!
//! Normal equations are assembled directly in banded storage: nodes are
//! ordered chronologically, so odometry couples only nearby nodes and the
//! damped Hessian is solved by a banded Cholesky factorization.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Pose2;

use super::graph::{anchor_error, odometry_error, FactorGraph};
use super::SlamError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmParams {
    pub lambda0: f64,
    pub max_iters: usize,
    /// Relative cost decrease below which the solver stops.
    pub tol: f64,
}

impl Default for LmParams {
    fn default() -> Self {
        Self {
            lambda0: 1e-4,
            max_iters: 50,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub poses: Vec<Pose2>,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    /// Cost after each accepted step, starting with the initial cost.
    pub accepted_costs: Vec<f64>,
}

/// Symmetric banded matrix in lower band storage.
struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    /// Entry (i, j) with i >= j and i - j <= bw.
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(i >= j && i - j <= self.bw);
        &mut self.data[i * (self.bw + 1) + (i - j)]
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        if i < j || i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    /// In-place Cholesky; false when a pivot is not positive.
    fn cholesky(&mut self) -> bool {
        let bw = self.bw;
        for j in 0..self.n {
            let lo = j.saturating_sub(bw);
            let mut s = self.get(j, j);
            for k in lo..j {
                let l = self.get(j, k);
                s -= l * l;
            }
            if !(s > 0.0) || !s.is_finite() {
                return false;
            }
            let d = s.sqrt();
            *self.at(j, j) = d;
            for i in j + 1..(j + bw + 1).min(self.n) {
                let lo_i = i.saturating_sub(bw);
                let mut v = self.get(i, j);
                for k in lo_i.max(lo)..j {
                    v -= self.get(i, k) * self.get(j, k);
                }
                *self.at(i, j) = v / d;
            }
        }
        true
    }

    #[allow(clippy::needless_range_loop)]
    fn solve_factored(&self, b: &mut [f64]) {
        let bw = self.bw;
        for i in 0..self.n {
            let mut v = b[i];
            for k in i.saturating_sub(bw)..i {
                v -= self.get(i, k) * b[k];
            }
            b[i] = v / self.get(i, i);
        }
        for i in (0..self.n).rev() {
            let mut v = b[i];
            for k in i + 1..(i + bw + 1).min(self.n) {
                v -= self.get(k, i) * b[k];
            }
            b[i] = v / self.get(i, i);
        }
    }
}

struct Linearization {
    cost: f64,
    hessian: BandMatrix,
    gradient: Vec<f64>,
}

fn whiten(information: &Matrix3<f64>) -> Matrix3<f64> {
    information
        .cholesky()
        .expect("factor information validated on insertion")
        .l()
        .transpose()
}

fn node_bandwidth(graph: &FactorGraph) -> usize {
    graph
        .odometry()
        .iter()
        .map(|f| f.from.abs_diff(f.to))
        .max()
        .unwrap_or(0)
}

fn cost(graph: &FactorGraph, x: &[Pose2]) -> f64 {
    let mut c = 0.0;
    for f in graph.odometry() {
        let (e, _, _) = odometry_error(&x[f.from], &x[f.to], &f.measurement);
        c += e.dot(&(f.information * e));
    }
    for a in graph.anchors() {
        let e = anchor_error(&x[a.node], &a.measurement);
        c += e.dot(&(a.information * e));
    }
    c
}

fn linearize(graph: &FactorGraph, x: &[Pose2]) -> Linearization {
    let n = 3 * x.len();
    let bw = 3 * node_bandwidth(graph) + 2;
    let mut h = BandMatrix::zeros(n, bw);
    let mut g = vec![0.0; n];
    let mut total = 0.0;

    let add_block = |h: &mut BandMatrix, bi: usize, bj: usize, m: &Matrix3<f64>| {
        // Only the lower triangle is stored.
        for r in 0..3 {
            for c in 0..3 {
                let (i, j) = (3 * bi + r, 3 * bj + c);
                if i >= j {
                    *h.at(i, j) += m[(r, c)];
                }
            }
        }
    };

    for f in graph.odometry() {
        let w = whiten(&f.information);
        let (e, ji, jj) = odometry_error(&x[f.from], &x[f.to], &f.measurement);
        let r = w * e;
        let (ai, aj) = (w * ji, w * jj);
        total += r.norm_squared();
        let gi: Vector3<f64> = ai.transpose() * r;
        let gj: Vector3<f64> = aj.transpose() * r;
        for k in 0..3 {
            g[3 * f.from + k] += gi[k];
            g[3 * f.to + k] += gj[k];
        }
        add_block(&mut h, f.from, f.from, &(ai.transpose() * ai));
        add_block(&mut h, f.to, f.to, &(aj.transpose() * aj));
        if f.to > f.from {
            add_block(&mut h, f.to, f.from, &(aj.transpose() * ai));
        } else {
            add_block(&mut h, f.from, f.to, &(ai.transpose() * aj));
        }
    }
    for a in graph.anchors() {
        let w = whiten(&a.information);
        let r = w * anchor_error(&x[a.node], &a.measurement);
        total += r.norm_squared();
        let ga: Vector3<f64> = w.transpose() * r;
        for k in 0..3 {
            g[3 * a.node + k] += ga[k];
        }
        add_block(&mut h, a.node, a.node, &(w.transpose() * w));
    }
    Linearization {
        cost: total,
        hessian: h,
        gradient: g,
    }
}

/// Levenberg-Marquardt with Marquardt diagonal scaling and multiplicative
/// damping updates. Only cost-decreasing steps are accepted, so the returned
/// cost never exceeds the initial cost.
pub fn optimize_lm(graph: &FactorGraph, initial: &[Pose2], params: &LmParams) -> Result<LmReport, SlamError> {
    if initial.len() != graph.num_nodes() {
        return Err(SlamError::EstimateMismatch {
            expected: graph.num_nodes(),
            got: initial.len(),
        });
    }
    graph.check_gauge()?;

    let mut x = initial.to_vec();
    let mut lin = linearize(graph, &x);
    let initial_cost = lin.cost;
    let mut accepted_costs = vec![initial_cost];
    let mut lambda = params.lambda0;
    let mut iterations = 0;

    while iterations < params.max_iters && lin.cost > 1e-30 {
        iterations += 1;
        let n = lin.gradient.len();
        let mut damped = BandMatrix {
            n,
            bw: lin.hessian.bw,
            data: lin.hessian.data.clone(),
        };
        for i in 0..n {
            let d = lin.hessian.get(i, i);
            if !(d > 0.0) {
                return Err(SlamError::SingularSystem(format!("zero curvature in state {i}")));
            }
            *damped.at(i, i) = d * (1.0 + lambda);
        }
        if !damped.cholesky() {
            lambda *= 10.0;
            if lambda > 1e12 {
                return Err(SlamError::SingularSystem(
                    "damped normal equations are not positive definite".into(),
                ));
            }
            continue;
        }
        let mut step: Vec<f64> = lin.gradient.iter().map(|v| -v).collect();
        damped.solve_factored(&mut step);
        let candidate: Vec<Pose2> = x
            .iter()
            .enumerate()
            .map(|(i, p)| Pose2::new(p.x + step[3 * i], p.y + step[3 * i + 1], p.theta + step[3 * i + 2]))
            .collect();
        let new_cost = cost(graph, &candidate);
        if new_cost < lin.cost {
            let rel = (lin.cost - new_cost) / lin.cost;
            x = candidate;
            lin = linearize(graph, &x);
            accepted_costs.push(lin.cost);
            lambda = (lambda / 10.0).max(1e-12);
            if rel < params.tol {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }

    Ok(LmReport {
        poses: x,
        initial_cost,
        final_cost: lin.cost,
        iterations,
        accepted_costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slam::graph::{diagonal_information, graph_cost};
    use std::f64::consts::PI;

    #[test]
    fn band_cholesky_matches_dense() {
        // Random SPD banded matrix.
        let n = 12;
        let bw = 4;
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                if i - j <= bw {
                    let v = if i == j {
                        10.0
                    } else {
                        ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6
                    };
                    dense[(i, j)] = v;
                    dense[(j, i)] = v;
                }
            }
        }
        let mut band = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                *band.at(i, j) = dense[(i, j)];
            }
        }
        assert!(band.cholesky());
        let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let mut x = rhs.clone();
        band.solve_factored(&mut x);
        let expected = dense.cholesky().unwrap().solve(&nalgebra::DVector::from_vec(rhs));
        for i in 0..n {
            assert!((x[i] - expected[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn prior_only_converges_to_anchor() {
        let mut g = FactorGraph::with_nodes(1);
        let target = Pose2::new(1.0, 2.0, 0.3);
        g.add_anchor(0, target, Matrix3::identity()).unwrap();
        let r = optimize_lm(&g, &[Pose2::identity()], &LmParams::default()).unwrap();
        let p = r.poses[0];
        assert!((p.x - 1.0).abs() < 1e-8 && (p.y - 2.0).abs() < 1e-8 && (p.theta - 0.3).abs() < 1e-8);
    }

    #[test]
    fn chain_matches_composition() {
        let mut g = FactorGraph::with_nodes(3);
        g.add_anchor(0, Pose2::identity(), Matrix3::identity()).unwrap();
        g.add_odometry(0, 1, Pose2::new(1.0, 0.0, 0.0), Matrix3::identity())
            .unwrap();
        g.add_odometry(1, 2, Pose2::new(1.0, 0.0, PI / 2.0), Matrix3::identity())
            .unwrap();
        let init = vec![
            Pose2::new(0.2, -0.1, 0.1),
            Pose2::new(0.7, 0.3, 0.2),
            Pose2::new(1.5, 0.4, 1.0),
        ];
        let r = optimize_lm(&g, &init, &LmParams::default()).unwrap();
        let p = r.poses[2];
        assert!((p.x - 2.0).abs() < 1e-6 && p.y.abs() < 1e-6 && (p.theta - PI / 2.0).abs() < 1e-6);
        assert!(r.final_cost <= r.initial_cost);
        assert!((graph_cost(&g, &r.poses).unwrap() - r.final_cost).abs() < 1e-12);
    }

    #[test]
    fn unanchored_graph_is_rejected() {
        let mut g = FactorGraph::with_nodes(2);
        g.add_odometry(0, 1, Pose2::new(1.0, 0.0, 0.0), diagonal_information(0.1, 0.1, 0.1))
            .unwrap();
        assert_eq!(
            optimize_lm(&g, &[Pose2::identity(); 2], &LmParams::default()),
            Err(SlamError::NoAnchor)
        );
    }
}
