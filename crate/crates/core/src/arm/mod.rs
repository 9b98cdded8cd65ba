//! Manipulation at a parked cell.

mod effector;
mod kinematics;
mod sequence;
mod servo;
mod survey;

pub use effector::{pollinate, EndEffectorState, PollinationParams};
pub use kinematics::{fk, ik, ik_point, tip_position, ArmMount, ArmSpec, IkParams, IkTarget, JointConfig, TipPose};
pub use sequence::{
    exact_order, nearest_neighbor_order, plan_sequence_exact, plan_sequence_nn, sequence_cost, target_configs,
    SequencePlan, MAX_EXACT_TARGETS,
};
pub use servo::{servo_step, ServoParams, ServoRegime, ServoState};
pub use survey::{survey_workspace, FlowerTarget};

use crate::world::FlowerState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArmError {
    #[error("target {distance:.3} m from the shoulder is beyond reach {reach:.3} m")]
    Unreachable { distance: f64, reach: f64 },
    #[error("target needs base yaw {0:.3} rad, outside the joint limits")]
    YawLimit(f64),
    #[error("inverse kinematics did not converge")]
    NoConvergence,
    #[error("{n} targets exceed the exhaustive sequencing cap of {max}")]
    TooManyTargets { n: usize, max: usize },
    #[error("flower {flower} is {state:?}, not Ready")]
    NotReady { flower: u32, state: FlowerState },
    #[error("invalid arm configuration: {0}")]
    InvalidSpec(String),
}
