//! Color segmentation into connected flower-colored patches.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::lut::SegmentationLut;

pub const DEFAULT_MIN_BLOB: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl BBox {
    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.width && y < self.y + self.height
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }
}

/// One 4-connected component of flower-classified pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePatch {
    pub bbox: BBox,
    pub pixel_count: usize,
    /// Component pixels over bounding-box area.
    pub flower_fraction: f64,
    /// Mean pixel coordinates (x, y).
    pub centroid: (f64, f64),
}

/// Per-pixel flower mask in row-major order.
pub fn flower_mask(image: &RgbImage, lut: &SegmentationLut) -> Vec<bool> {
    image.pixels().map(|p| lut.is_flower(p[0], p[1], p[2])).collect()
}

/// Looks every pixel up in the table, then extracts 4-connected components
/// of at least `min_blob` pixels. Patches are ordered by the scanline
/// position of their bounding box's top-left corner.
pub fn segment_image(image: &RgbImage, lut: &SegmentationLut, min_blob: usize) -> Vec<ImagePatch> {
    let mask = flower_mask(image, lut);
    components(&mask, image.width() as usize, image.height() as usize, min_blob)
}

/// Connected components of a row-major mask.
pub fn components(mask: &[bool], width: usize, height: usize, min_blob: usize) -> Vec<ImagePatch> {
    assert_eq!(mask.len(), width * height, "mask size mismatch");
    let mut seen = vec![false; mask.len()];
    let mut stack = Vec::new();
    let mut patches = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % width, i / width);
            n += 1;
            sx += x as f64;
            sy += y as f64;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < width {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - width);
            }
            if y + 1 < height {
                visit(i + width);
            }
        }
        if n < min_blob {
            continue;
        }
        let bbox = BBox {
            x: x0 as u32,
            y: y0 as u32,
            width: (x1 - x0 + 1) as u32,
            height: (y1 - y0 + 1) as u32,
        };
        patches.push(ImagePatch {
            bbox,
            pixel_count: n,
            flower_fraction: n as f64 / bbox.area() as f64,
            centroid: (sx / n as f64, sy / n as f64),
        });
    }
    patches.sort_by_key(|p| (p.bbox.y, p.bbox.x));
    patches
}
