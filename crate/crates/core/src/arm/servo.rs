//! Visual-servo final approach.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::Point3;

use super::ArmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ServoRegime {
    /// Far range: the depth camera, noise growing with distance.
    DepthCamera,
    /// Inside the depth camera's blind zone: the endoscope camera.
    Endoscope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServoParams {
    /// Fraction of the remaining error closed per step, in (0, 1].
    pub alpha: f64,
    /// Depth-camera noise per meter of range.
    pub sigma0: f64,
    /// Endoscope noise, meters.
    pub sigma_endo: f64,
    /// Convergence distance, meters.
    pub tolerance: f64,
    /// Below this tip-to-estimate distance the endoscope takes over.
    pub switch_distance: f64,
}

impl Default for ServoParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            sigma0: 0.003,
            sigma_endo: 0.001,
            tolerance: 0.005,
            switch_distance: 0.18,
        }
    }
}

impl ServoParams {
    pub fn validate(&self) -> Result<(), ArmError> {
        let ok = self.alpha > 0.0
            && self.alpha <= 1.0
            && self.sigma0 >= 0.0
            && self.sigma_endo >= 0.0
            && self.tolerance > 0.0
            && self.switch_distance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ArmError::InvalidSpec(format!(
                "servo parameters out of range: {self:?}"
            )))
        }
    }

    pub fn regime_for(&self, tip: &Point3, estimate: &Point3) -> ServoRegime {
        if (estimate - tip).norm() < self.switch_distance {
            ServoRegime::Endoscope
        } else {
            ServoRegime::DepthCamera
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoState {
    pub tip: Point3,
    pub estimate: Point3,
    pub regime: ServoRegime,
    pub converged: bool,
}

impl ServoState {
    pub fn new(tip: Point3, estimate: Point3, params: &ServoParams) -> Self {
        Self {
            tip,
            estimate,
            regime: params.regime_for(&tip, &estimate),
            converged: false,
        }
    }
}

/// One measure-and-move cycle: re-estimate the flower with the current
/// regime's noise, move the tip a fraction `alpha` toward the estimate, then
/// update the regime and the convergence flag.
pub fn servo_step<R: Rng + ?Sized>(
    state: &ServoState,
    true_flower: &Point3,
    params: &ServoParams,
    rng: &mut R,
) -> ServoState {
    let d = (true_flower - state.tip).norm();
    let sigma = match state.regime {
        ServoRegime::DepthCamera => params.sigma0 * d,
        ServoRegime::Endoscope => params.sigma_endo,
    };
    let mut estimate = *true_flower;
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).expect("finite sigma");
        for k in 0..3 {
            estimate[k] += noise.sample(rng);
        }
    }
    let tip = state.tip + (estimate - state.tip) * params.alpha;
    ServoState {
        tip,
        estimate,
        regime: params.regime_for(&tip, &estimate),
        converged: (true_flower - tip).norm() <= params.tolerance,
    }
}
