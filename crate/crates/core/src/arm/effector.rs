//! Brush end-effector and the pistil coverage model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::world::{Flower, FlowerState};

use super::ArmError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PollinationParams {
    /// Coverage added per extend-retract stroke.
    pub stroke_coverage: f64,
    /// Coverage at which a flower counts as pollinated.
    pub threshold: f64,
    pub strokes: u32,
}

impl Default for PollinationParams {
    fn default() -> Self {
        Self {
            stroke_coverage: 0.3,
            threshold: 0.8,
            strokes: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EndEffectorState {
    /// Actuator extensions in [0, 1].
    pub extensions: [f64; 3],
    /// Accumulated pistil coverage per flower id.
    pub coverage: BTreeMap<u32, f64>,
}

impl EndEffectorState {
    pub fn coverage_of(&self, flower_id: u32) -> f64 {
        self.coverage.get(&flower_id).copied().unwrap_or(0.0)
    }
}

/// Brushes `flower` with `strokes` extend-retract cycles of all three
/// actuators. Returns whether the flower ended pollinated.
pub fn pollinate(
    effector: &mut EndEffectorState,
    flower: &mut Flower,
    strokes: u32,
    params: &PollinationParams,
    time: f64,
) -> Result<bool, ArmError> {
    if flower.state() != FlowerState::Ready {
        return Err(ArmError::NotReady {
            flower: flower.id,
            state: flower.state(),
        });
    }
    for _ in 0..strokes {
        effector.extensions = [1.0; 3];
        flower.add_coverage(params.stroke_coverage, params.threshold, time);
        effector.extensions = [0.0; 3];
        effector.coverage.insert(flower.id, flower.pistil_coverage());
        if flower.state() != FlowerState::Ready {
            break;
        }
    }
    Ok(flower.state() == FlowerState::Pollinated)
}
