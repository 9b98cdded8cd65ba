//! Two-stage flower detection: color segmentation, then patch
//! classification, plus geolocation of camera detections onto grid cells.

mod cellmap;
mod classifier;
mod color;
mod geolocate;
mod lut;
mod metrics;
mod segment;
mod synth;

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ImageEncoder, RgbImage};
use thiserror::Error;

use crate::world::GridCellRef;

pub use cellmap::{CellFlowerMap, CellRecord};
pub use classifier::{classify_patch, PatchClassifier, ThresholdPatchClassifier};
pub use color::{classify_rgb, train_color_model, ColorModel, PixelClass, BINS};
pub use geolocate::bearing_to_cell;
pub use lut::{build_lut, pack_rgb, SegmentationLut, LUT_SIZE};
pub use metrics::ConfusionCounts;
pub use segment::{components, flower_mask, segment_image, BBox, ImagePatch, DEFAULT_MIN_BLOB};
pub use synth::{generate_image, LabeledRegion, SynthParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VisionError {
    #[error("training data must contain pixels of both classes")]
    MissingClass,
    #[error("invalid color model: {0}")]
    InvalidModel(String),
    #[error("observation of {cell} at t={time} precedes last observation at t={last}")]
    StaleObservation { cell: GridCellRef, time: f64, last: f64 },
    #[error("bearing must be a unit vector (norm {0})")]
    InvalidBearing(f64),
    #[error("image error: {0}")]
    Image(String),
}

/// Reads an 8-bit RGB image from a binary PPM (P6) file.
pub fn read_ppm(path: &Path) -> Result<RgbImage, VisionError> {
    let reader = image::ImageReader::open(path).map_err(|e| VisionError::Image(format!("{}: {e}", path.display())))?;
    let mut reader = reader;
    reader.set_format(image::ImageFormat::Pnm);
    let img = reader
        .decode()
        .map_err(|e| VisionError::Image(format!("{}: {e}", path.display())))?;
    Ok(img.to_rgb8())
}

/// Writes a binary PPM (P6) file.
pub fn write_ppm(path: &Path, image: &RgbImage) -> Result<(), VisionError> {
    let file = std::fs::File::create(path).map_err(|e| VisionError::Image(format!("{}: {e}", path.display())))?;
    let enc = PnmEncoder::new(std::io::BufWriter::new(file)).with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary));
    enc.write_image(
        image.as_raw(),
        image.width(),
        image.height(),
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| VisionError::Image(format!("{}: {e}", path.display())))
}

/// Pixel labels derived from region annotations: pixels inside a flower
/// region count as flower, all others as non-flower.
pub fn labeled_pixels<'a>(
    image: &'a RgbImage,
    regions: &'a [LabeledRegion],
) -> impl Iterator<Item = ([u8; 3], PixelClass)> + 'a {
    image.enumerate_pixels().map(move |(x, y, p)| {
        let flower = regions.iter().any(|r| r.flower && r.bbox.contains(x, y));
        let class = if flower {
            PixelClass::Flower
        } else {
            PixelClass::NonFlower
        };
        (p.0, class)
    })
}

/// Runs both stages on one annotated region: it is predicted a flower when
/// segmenting its crop yields a patch the classifier accepts.
pub fn predict_region(
    image: &RgbImage,
    bbox: &BBox,
    lut: &SegmentationLut,
    min_blob: usize,
    classifier: &dyn PatchClassifier,
) -> bool {
    let crop = image::imageops::crop_imm(image, bbox.x, bbox.y, bbox.width, bbox.height).to_image();
    segment_image(&crop, lut, min_blob)
        .iter()
        .any(|p| classifier.is_flower(p))
}
