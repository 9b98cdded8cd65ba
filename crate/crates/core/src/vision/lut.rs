//! Precomputed per-pixel decisions over the full 24-bit color space.

use super::color::{ColorModel, PixelClass};

pub const LUT_SIZE: usize = 1 << 24;

/// One byte per packed RGB value: 1 for flower, 0 for non-flower.
#[derive(Clone, PartialEq, Eq)]
pub struct SegmentationLut {
    table: Vec<u8>,
}

impl std::fmt::Debug for SegmentationLut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let flower = self.table.iter().filter(|&&v| v != 0).count();
        f.debug_struct("SegmentationLut")
            .field("len", &self.table.len())
            .field("flower_entries", &flower)
            .finish()
    }
}

#[inline]
pub fn pack_rgb(r: u8, g: u8, b: u8) -> usize {
    ((r as usize) << 16) | ((g as usize) << 8) | b as usize
}

/// Evaluates the classifier once for every representable pixel.
pub fn build_lut(model: &ColorModel) -> SegmentationLut {
    let mut table = vec![0u8; LUT_SIZE];
    let blue = model.blue_llr();
    for r in 0..=255u8 {
        for g in 0..=255u8 {
            let partial = model.partial_odds(r, g);
            let row = &mut table[pack_rgb(r, g, 0)..pack_rgb(r, g, 0) + 256];
            for (b, slot) in row.iter_mut().enumerate() {
                *slot = (partial + blue[b] > 0.0) as u8;
            }
        }
    }
    SegmentationLut { table }
}

impl SegmentationLut {
    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    #[inline]
    pub fn is_flower(&self, r: u8, g: u8, b: u8) -> bool {
        self.table[pack_rgb(r, g, b)] != 0
    }

    #[inline]
    pub fn classify(&self, r: u8, g: u8, b: u8) -> PixelClass {
        if self.is_flower(r, g, b) {
            PixelClass::Flower
        } else {
            PixelClass::NonFlower
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.table
    }
}
