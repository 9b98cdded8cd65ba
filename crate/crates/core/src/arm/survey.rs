//! Close-range flower survey from a parking pose.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{Point3, Pose2};
use crate::world::{FlowerState, GridCellRef, World};

use super::kinematics::ArmSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowerTarget {
    pub flower_id: u32,
    /// Estimated position in the world frame.
    pub position: Point3,
    /// Per-axis standard deviation of the estimate.
    pub sigma: f64,
}

/// Ready flowers of `cell` within reach of the shoulder for a base at
/// `robot`, with per-axis Gaussian noise `sigma_far` on each position.
/// Targets come out in flower id order.
pub fn survey_workspace<R: Rng + ?Sized>(
    world: &World,
    robot: &Pose2,
    cell: &GridCellRef,
    arm: &ArmSpec,
    sigma_far: f64,
    rng: &mut R,
) -> Vec<FlowerTarget> {
    let shoulder = arm.shoulder(robot);
    let noise = Normal::new(0.0, sigma_far.max(0.0)).expect("finite sigma");
    let mut flowers: Vec<_> = world
        .flowers_in_cell(cell)
        .filter(|f| f.state() == FlowerState::Ready)
        .filter(|f| (f.position - shoulder).norm() <= arm.reach())
        .collect();
    flowers.sort_by_key(|f| f.id);
    flowers
        .into_iter()
        .map(|f| {
            let mut position = f.position;
            if sigma_far > 0.0 {
                for k in 0..3 {
                    position[k] += noise.sample(rng);
                }
            }
            FlowerTarget {
                flower_id: f.id,
                position,
                sigma: sigma_far.max(0.0),
            }
        })
        .collect()
}
