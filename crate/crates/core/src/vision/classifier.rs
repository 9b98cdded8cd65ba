//! Second-stage patch classification.

use serde::{Deserialize, Serialize};

use super::segment::ImagePatch;

/// Decides whether a segmented patch is a flower.
pub trait PatchClassifier {
    fn is_flower(&self, patch: &ImagePatch) -> bool;
}

/// Shape rule standing in for a learned classifier: compact patches of
/// plausible size are flowers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdPatchClassifier {
    /// Minimum flower-pixel fraction (inclusive).
    pub tau: f64,
    pub min_area: usize,
    pub max_area: usize,
}

impl Default for ThresholdPatchClassifier {
    fn default() -> Self {
        Self {
            tau: 0.6,
            min_area: 25,
            max_area: 20_000,
        }
    }
}

impl PatchClassifier for ThresholdPatchClassifier {
    fn is_flower(&self, patch: &ImagePatch) -> bool {
        patch.flower_fraction >= self.tau && (self.min_area..=self.max_area).contains(&patch.pixel_count)
    }
}

pub fn classify_patch(patch: &ImagePatch, classifier: &dyn PatchClassifier) -> bool {
    classifier.is_flower(patch)
}
