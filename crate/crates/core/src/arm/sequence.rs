//! Ordering flower targets to minimize joint-space travel.

use serde::{Deserialize, Serialize};

use crate::geometry::Pose2;

use super::kinematics::{ik_point, ArmSpec, IkParams, JointConfig};
use super::survey::FlowerTarget;
use super::ArmError;

/// Brute force is capped here; 9! orderings is the largest instance allowed.
pub const MAX_EXACT_TARGETS: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequencePlan {
    /// Visiting order as indices into the target list.
    pub order: Vec<usize>,
    /// Joint configuration for every target, in input order.
    pub configs: Vec<JointConfig>,
    /// Σ‖q_{i+1} − q_i‖ starting from the start configuration.
    pub cost: f64,
}

/// Total joint travel of visiting `configs` in `order` from `start`.
pub fn sequence_cost(start: &JointConfig, configs: &[JointConfig], order: &[usize]) -> f64 {
    let mut at = *start;
    let mut total = 0.0;
    for &i in order {
        total += at.distance(&configs[i]);
        at = configs[i];
    }
    total
}

/// Exhaustive search over orderings in lexicographic order; the first
/// optimum found is kept.
pub fn exact_order(start: &JointConfig, configs: &[JointConfig]) -> Result<(Vec<usize>, f64), ArmError> {
    let n = configs.len();
    if n > MAX_EXACT_TARGETS {
        return Err(ArmError::TooManyTargets {
            n,
            max: MAX_EXACT_TARGETS,
        });
    }
    struct Search<'a> {
        configs: &'a [JointConfig],
        used: Vec<bool>,
        prefix: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }
    fn go(s: &mut Search, at: JointConfig, cost: f64) {
        if let Some((b, _)) = &s.best {
            if cost >= *b {
                return;
            }
        }
        if s.prefix.len() == s.configs.len() {
            s.best = Some((cost, s.prefix.clone()));
            return;
        }
        for i in 0..s.configs.len() {
            if s.used[i] {
                continue;
            }
            s.used[i] = true;
            s.prefix.push(i);
            let q = s.configs[i];
            go(s, q, cost + at.distance(&q));
            s.prefix.pop();
            s.used[i] = false;
        }
    }
    let mut s = Search {
        configs,
        used: vec![false; n],
        prefix: Vec::with_capacity(n),
        best: None,
    };
    go(&mut s, *start, 0.0);
    let (cost, order) = s.best.unwrap_or((0.0, Vec::new()));
    Ok((order, cost))
}

/// Nearest unvisited configuration first; ties go to the lower index.
pub fn nearest_neighbor_order(start: &JointConfig, configs: &[JointConfig]) -> (Vec<usize>, f64) {
    let mut used = vec![false; configs.len()];
    let mut order = Vec::with_capacity(configs.len());
    let mut at = *start;
    let mut cost = 0.0;
    for _ in 0..configs.len() {
        let (i, d) = configs
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, q)| (i, at.distance(q)))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((i, d)),
            })
            .expect("an unvisited target remains");
        used[i] = true;
        order.push(i);
        cost += d;
        at = configs[i];
    }
    (order, cost)
}

/// Solves IK for every target, seeded from `q_start`.
pub fn target_configs(
    arm: &ArmSpec,
    robot: &Pose2,
    targets: &[FlowerTarget],
    q_start: &JointConfig,
    ik_params: &IkParams,
) -> Result<Vec<JointConfig>, ArmError> {
    targets
        .iter()
        .map(|t| ik_point(arm, robot, &t.position, q_start, ik_params))
        .collect()
}

pub fn plan_sequence_exact(
    arm: &ArmSpec,
    robot: &Pose2,
    targets: &[FlowerTarget],
    q_start: &JointConfig,
    ik_params: &IkParams,
) -> Result<SequencePlan, ArmError> {
    if targets.len() > MAX_EXACT_TARGETS {
        return Err(ArmError::TooManyTargets {
            n: targets.len(),
            max: MAX_EXACT_TARGETS,
        });
    }
    let configs = target_configs(arm, robot, targets, q_start, ik_params)?;
    let (order, cost) = exact_order(q_start, &configs)?;
    Ok(SequencePlan { order, configs, cost })
}

pub fn plan_sequence_nn(
    arm: &ArmSpec,
    robot: &Pose2,
    targets: &[FlowerTarget],
    q_start: &JointConfig,
    ik_params: &IkParams,
) -> Result<SequencePlan, ArmError> {
    let configs = target_configs(arm, robot, targets, q_start, ik_params)?;
    let (order, cost) = nearest_neighbor_order(q_start, &configs);
    Ok(SequencePlan { order, configs, cost })
}
