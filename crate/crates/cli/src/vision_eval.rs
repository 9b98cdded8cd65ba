//! Train-and-test evaluation of the flower detector on a labeled image set.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use bramble::vision::{
    build_lut, generate_image, labeled_pixels, predict_region, read_ppm, train_color_model, write_ppm, BBox,
    ConfusionCounts, LabeledRegion, SynthParams, ThresholdPatchClassifier, DEFAULT_MIN_BLOB,
};

use crate::CliError;

pub const LABELS_FILE: &str = "labels.csv";
pub const REPORT_HEADER: &str = "tp,fp,tn,fn,precision,recall";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Flower,
    NonFlower,
}

/// One row of the label file: an annotated box in one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub image: String,
    pub split: Split,
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub label: Label,
}

impl LabelRow {
    fn region(&self) -> LabeledRegion {
        LabeledRegion {
            bbox: BBox {
                x: self.x,
                y: self.y,
                width: self.width,
                height: self.height,
            },
            flower: self.label == Label::Flower,
        }
    }
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>, CliError> {
    let bad = |e: &dyn std::fmt::Display| CliError::Validation(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(&e))?;
    reader
        .deserialize()
        .collect::<Result<Vec<LabelRow>, _>>()
        .map_err(|e| bad(&e))
}

/// Trains the color model on every pixel of the training images, then runs
/// both detection stages on each annotated box of the test images.
pub fn evaluate(images: &Path, labels: &[LabelRow]) -> Result<ConfusionCounts, CliError> {
    let mut by_image: BTreeMap<(&str, Split), Vec<&LabelRow>> = BTreeMap::new();
    for row in labels {
        if row.width == 0 || row.height == 0 {
            return Err(CliError::Validation(format!("{}: empty box", row.image)));
        }
        by_image.entry((row.image.as_str(), row.split)).or_default().push(row);
    }
    if !by_image.keys().any(|(_, s)| *s == Split::Test) {
        return Err(CliError::Validation("the test split is empty".into()));
    }
    if !by_image.keys().any(|(_, s)| *s == Split::Train) {
        return Err(CliError::Validation("the training split is empty".into()));
    }
    let load = |name: &str, rows: &[&LabelRow]| {
        let img = read_ppm(&images.join(name)).map_err(|e| CliError::Validation(e.to_string()))?;
        for r in rows {
            if r.x + r.width > img.width() || r.y + r.height > img.height() {
                return Err(CliError::Validation(format!(
                    "{name}: box at ({}, {}) leaves the image",
                    r.x, r.y
                )));
            }
        }
        Ok(img)
    };

    let mut pixels = Vec::new();
    for ((name, _), rows) in by_image.iter().filter(|((_, s), _)| *s == Split::Train) {
        let img = load(name, rows)?;
        let regions: Vec<LabeledRegion> = rows.iter().map(|r| r.region()).collect();
        pixels.extend(labeled_pixels(&img, &regions));
    }
    let model = train_color_model(&pixels).map_err(|e| CliError::Validation(e.to_string()))?;
    let lut = build_lut(&model);
    let classifier = ThresholdPatchClassifier::default();

    let mut counts = ConfusionCounts::default();
    for ((name, _), rows) in by_image.iter().filter(|((_, s), _)| *s == Split::Test) {
        let img = load(name, rows)?;
        for r in rows {
            let predicted = predict_region(&img, &r.region().bbox, &lut, DEFAULT_MIN_BLOB, &classifier);
            counts.record(r.label == Label::Flower, predicted);
        }
    }
    Ok(counts)
}

pub fn report_csv(c: &ConfusionCounts) -> String {
    format!(
        "{REPORT_HEADER}\n{},{},{},{},{:.6},{:.6}\n",
        c.tp,
        c.fp,
        c.tn,
        c.fn_,
        c.precision(),
        c.recall()
    )
}

/// Reads confusion counts from a CSV file with a `tp,fp,tn,fn` header.
pub fn read_confusion(path: &Path) -> Result<ConfusionCounts, CliError> {
    let bad = |e: &dyn std::fmt::Display| CliError::Validation(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(&e))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<ConfusionCounts>, _>>()
        .map_err(|e| bad(&e))?;
    match rows.as_slice() {
        [c] => Ok(*c),
        _ => Err(bad(&format!("expected one row of counts, found {}", rows.len()))),
    }
}

/// Writes `n` synthetic images and their label file. The first
/// `n - n_test` images form the training split.
pub fn generate_corpus(dir: &Path, n: usize, n_test: usize, seed: u64) -> Result<Vec<LabelRow>, CliError> {
    if n_test == 0 || n_test >= n {
        return Err(CliError::Validation(format!(
            "need 0 < test images < {n}, got {n_test}"
        )));
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = SynthParams::default();
    let mut rows = Vec::new();
    for i in 0..n {
        let (img, regions) = generate_image(&mut rng, &params);
        let name = format!("img_{i:04}.ppm");
        write_ppm(&dir.join(&name), &img).map_err(|e| CliError::Runtime(e.to_string()))?;
        let split = if i < n - n_test { Split::Train } else { Split::Test };
        rows.extend(regions.iter().map(|r| LabelRow {
            image: name.clone(),
            split,
            x: r.bbox.x,
            y: r.bbox.y,
            width: r.bbox.width,
            height: r.bbox.height,
            label: if r.flower { Label::Flower } else { Label::NonFlower },
        }));
    }
    let path = dir.join(LABELS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(rows)
}
