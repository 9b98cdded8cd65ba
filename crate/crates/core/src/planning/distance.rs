//! Exact Euclidean distance transform with nearest-obstacle features.

use crate::slam::{CellState, OccupancyGrid};

const BLOCK: i64 = 8;

/// Distance (in cells, center to center) from every cell to the nearest
/// obstacle cell, and the coordinates of that obstacle. Cells outside the
/// grid count as obstacles, so the border acts as a wall.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    height: usize,
    resolution: f64,
    dist: Vec<f64>,
    feature: Vec<(i64, i64)>,
}

impl DistanceField {
    /// Non-free cells (occupied or unknown) are obstacles.
    pub fn new(grid: &OccupancyGrid) -> Self {
        let (w, h) = (grid.width() as i64, grid.height() as i64);
        let blocked = |x: i64, y: i64| !grid.in_bounds(x, y) || grid.get((x as usize, y as usize)) != CellState::Free;
        // Sites: obstacle cells touching a free cell, including the virtual
        // ring just outside the grid. Only these can be nearest to a free cell.
        let bw = (w + 2 + BLOCK - 1) / BLOCK + 1;
        let bh = (h + 2 + BLOCK - 1) / BLOCK + 1;
        let mut buckets: Vec<Vec<(i64, i64)>> = vec![Vec::new(); (bw * bh) as usize];
        let bucket_of = |x: i64, y: i64| ((y + 1) / BLOCK, (x + 1) / BLOCK);
        for y in -1..=h {
            for x in -1..=w {
                if !blocked(x, y) {
                    continue;
                }
                let touches_free = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|(dx, dy)| grid.in_bounds(x + dx, y + dy) && !blocked(x + dx, y + dy));
                if touches_free {
                    let (by, bx) = bucket_of(x, y);
                    buckets[(by * bw + bx) as usize].push((x, y));
                }
            }
        }

        let n = (w * h) as usize;
        let mut dist = vec![0.0; n];
        let mut feature = vec![(0, 0); n];
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                if blocked(x, y) {
                    feature[i] = (x, y);
                    continue;
                }
                let (by, bx) = bucket_of(x, y);
                let mut best = (i64::MAX, (0i64, 0i64));
                let mut r = 0i64;
                loop {
                    // Any site in ring r is at least (r - 1) * BLOCK + 1 cells away.
                    let lower = ((r - 1).max(0) * BLOCK + 1).pow(2);
                    if r > 0 && lower > best.0 {
                        break;
                    }
                    if r > bw.max(bh) {
                        break;
                    }
                    for cy in by - r..=by + r {
                        for cx in bx - r..=bx + r {
                            if (cy - by).abs() != r && (cx - bx).abs() != r {
                                continue;
                            }
                            if cy < 0 || cx < 0 || cy >= bh || cx >= bw {
                                continue;
                            }
                            for &(sx, sy) in &buckets[(cy * bw + cx) as usize] {
                                let d2 = (sx - x).pow(2) + (sy - y).pow(2);
                                if d2 < best.0 || (d2 == best.0 && (sy, sx) < (best.1 .1, best.1 .0)) {
                                    best = (d2, (sx, sy));
                                }
                            }
                        }
                    }
                    r += 1;
                }
                dist[i] = (best.0 as f64).sqrt();
                feature[i] = best.1;
            }
        }
        Self {
            width: w as usize,
            height: h as usize,
            resolution: grid.resolution(),
            dist,
            feature,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Distance in cells.
    pub fn cells(&self, (x, y): (usize, usize)) -> f64 {
        self.dist[y * self.width + x]
    }

    /// Distance in meters.
    pub fn meters(&self, c: (usize, usize)) -> f64 {
        self.cells(c) * self.resolution
    }

    /// Nearest obstacle cell (may lie just outside the grid).
    pub fn feature(&self, (x, y): (usize, usize)) -> (i64, i64) {
        self.feature[y * self.width + x]
    }
}
