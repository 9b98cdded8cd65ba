//! Procedural test images: flower discs and look-alike distractors on a
//! foliage texture.

use image::{Rgb, RgbImage};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::segment::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthParams {
    pub width: u32,
    pub height: u32,
    pub max_flowers: usize,
    pub max_distractors: usize,
    pub min_radius: f64,
    pub max_radius: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            width: 240,
            height: 180,
            max_flowers: 5,
            max_distractors: 5,
            min_radius: 6.0,
            max_radius: 14.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledRegion {
    pub bbox: BBox,
    pub flower: bool,
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn jitter<R: Rng + ?Sized>(rng: &mut R, base: [f64; 3], sigma: f64) -> Rgb<u8> {
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    Rgb([
        clamp_u8(base[0] + n.sample(rng)),
        clamp_u8(base[1] + n.sample(rng)),
        clamp_u8(base[2] + n.sample(rng)),
    ])
}

fn foliage<R: Rng + ?Sized>(rng: &mut R, w: u32, h: u32) -> RgbImage {
    // Smooth blotches of leaf and soil tones plus per-pixel noise.
    let tones = [
        [40.0, 110.0, 35.0],
        [70.0, 140.0, 50.0],
        [30.0, 80.0, 30.0],
        [95.0, 75.0, 45.0],
    ];
    let blobs: Vec<(f64, f64, f64, usize)> = (0..12)
        .map(|_| {
            (
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
                rng.random_range(15.0..60.0),
                rng.random_range(0..tones.len()),
            )
        })
        .collect();
    let mut img = RgbImage::new(w, h);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let mut tone = tones[0];
        for &(cx, cy, r, t) in &blobs {
            if (x as f64 - cx).hypot(y as f64 - cy) < r {
                tone = tones[t];
            }
        }
        *px = jitter(rng, tone, 10.0);
    }
    img
}

fn disc_bbox(cx: f64, cy: f64, r: f64, w: u32, h: u32) -> BBox {
    let x0 = (cx - r).floor().max(0.0) as u32;
    let y0 = (cy - r).floor().max(0.0) as u32;
    let x1 = ((cx + r).ceil() as u32).min(w - 1);
    let y1 = ((cy + r).ceil() as u32).min(h - 1);
    BBox {
        x: x0,
        y: y0,
        width: x1 - x0 + 1,
        height: y1 - y0 + 1,
    }
}

/// Renders one image and the ground-truth regions in it.
pub fn generate_image<R: Rng + ?Sized>(rng: &mut R, params: &SynthParams) -> (RgbImage, Vec<LabeledRegion>) {
    let (w, h) = (params.width, params.height);
    let mut img = foliage(rng, w, h);
    let mut regions: Vec<LabeledRegion> = Vec::new();
    let margin = params.max_radius + 2.0;
    let free = |regions: &[LabeledRegion], b: &BBox| {
        let grown = BBox {
            x: b.x.saturating_sub(3),
            y: b.y.saturating_sub(3),
            width: b.width + 6,
            height: b.height + 6,
        };
        regions.iter().all(|r| !r.bbox.intersects(&grown))
    };

    let n_flowers = rng.random_range(0..=params.max_flowers);
    for _ in 0..n_flowers {
        for _attempt in 0..20 {
            let r = rng.random_range(params.min_radius..params.max_radius);
            let cx = rng.random_range(margin..w as f64 - margin);
            let cy = rng.random_range(margin..h as f64 - margin);
            let bbox = disc_bbox(cx, cy, r, w, h);
            if !free(&regions, &bbox) {
                continue;
            }
            let petal = [
                rng.random_range(225.0..245.0),
                rng.random_range(205.0..235.0),
                rng.random_range(200.0..235.0),
            ];
            for y in bbox.y..bbox.y + bbox.height {
                for x in bbox.x..bbox.x + bbox.width {
                    let d = (x as f64 + 0.5 - cx).hypot(y as f64 + 0.5 - cy);
                    if d <= r * 0.3 {
                        img.put_pixel(x, y, jitter(rng, [200.0, 190.0, 70.0], 8.0));
                    } else if d <= r {
                        img.put_pixel(x, y, jitter(rng, petal, 8.0));
                    }
                }
            }
            regions.push(LabeledRegion { bbox, flower: true });
            break;
        }
    }

    let n_distractors = rng.random_range(0..=params.max_distractors);
    for _ in 0..n_distractors {
        for _attempt in 0..20 {
            let kind = rng.random_range(0..3);
            let cx = rng.random_range(margin..w as f64 - margin);
            let cy = rng.random_range(margin..h as f64 - margin);
            match kind {
                0 => {
                    // Pale twine or plant tag: a thin diagonal stroke.
                    let len = rng.random_range(20.0..margin * 2.0 - 2.0);
                    let ang: f64 = rng.random_range(0.3..1.2) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    let (dx, dy) = (ang.cos() * len / 2.0, ang.sin() * len / 2.0);
                    let bbox = disc_bbox(cx, cy, len / 2.0 + 1.0, w, h);
                    if !free(&regions, &bbox) {
                        continue;
                    }
                    let steps = (len * 2.0) as usize;
                    for i in 0..=steps {
                        let t = i as f64 / steps as f64 * 2.0 - 1.0;
                        let (px, py) = (cx + dx * t, cy + dy * t);
                        for oy in 0..2 {
                            let (x, y) = (px as u32, py as u32 + oy);
                            if bbox.contains(x, y) {
                                img.put_pixel(x, y, jitter(rng, [230.0, 222.0, 215.0], 6.0));
                            }
                        }
                    }
                    regions.push(LabeledRegion { bbox, flower: false });
                }
                1 => {
                    // Yellowing leaf.
                    let r = rng.random_range(params.min_radius..params.max_radius);
                    let bbox = disc_bbox(cx, cy, r, w, h);
                    if !free(&regions, &bbox) {
                        continue;
                    }
                    for y in bbox.y..bbox.y + bbox.height {
                        for x in bbox.x..bbox.x + bbox.width {
                            let ex = (x as f64 + 0.5 - cx) / r;
                            let ey = (y as f64 + 0.5 - cy) / (0.6 * r);
                            if ex * ex + ey * ey <= 1.0 {
                                img.put_pixel(x, y, jitter(rng, [190.0, 170.0, 60.0], 10.0));
                            }
                        }
                    }
                    regions.push(LabeledRegion { bbox, flower: false });
                }
                _ => {
                    // Specular glints: sparse pale speckles.
                    let r = rng.random_range(params.min_radius..params.max_radius);
                    let bbox = disc_bbox(cx, cy, r, w, h);
                    if !free(&regions, &bbox) {
                        continue;
                    }
                    for y in bbox.y..bbox.y + bbox.height {
                        for x in bbox.x..bbox.x + bbox.width {
                            if rng.random_bool(0.25) {
                                img.put_pixel(x, y, jitter(rng, [235.0, 235.0, 230.0], 6.0));
                            }
                        }
                    }
                    regions.push(LabeledRegion { bbox, flower: false });
                }
            }
            break;
        }
    }
    (img, regions)
}
