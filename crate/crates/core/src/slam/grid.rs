//! 2D occupancy grid built from map points.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Pose2};

use super::SlamError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

/// Placement and size of a grid. Cell `(ix, iy)` covers
/// `[ix·res, (ix+1)·res) × [iy·res, (iy+1)·res)` in the origin frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Pose2,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    spec: GridSpec,
    cells: Vec<CellState>,
}

pub type Cell = (usize, usize);

impl OccupancyGrid {
    pub fn new(spec: GridSpec, fill: CellState) -> Result<Self, SlamError> {
        if !(spec.resolution > 0.0) || spec.width == 0 || spec.height == 0 {
            return Err(SlamError::InvalidGrid(
                "resolution and dimensions must be positive".into(),
            ));
        }
        Ok(Self {
            spec,
            cells: vec![fill; spec.width * spec.height],
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn width(&self) -> usize {
        self.spec.width
    }

    pub fn height(&self) -> usize {
        self.spec.height
    }

    pub fn resolution(&self) -> f64 {
        self.spec.resolution
    }

    pub fn index(&self, (ix, iy): Cell) -> usize {
        iy * self.spec.width + ix
    }

    pub fn cell_at_index(&self, i: usize) -> Cell {
        (i % self.spec.width, i / self.spec.width)
    }

    pub fn get(&self, c: Cell) -> CellState {
        self.cells[self.index(c)]
    }

    pub fn set(&mut self, c: Cell, state: CellState) {
        let i = self.index(c);
        self.cells[i] = state;
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.get(c) == CellState::Free
    }

    pub fn states(&self) -> &[CellState] {
        &self.cells
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }

    /// Cell containing a world point, if inside the grid.
    pub fn cell_of(&self, p: &Point2) -> Option<Cell> {
        let local = self.spec.origin.inverse_transform_point(p);
        let fx = (local.x / self.spec.resolution).floor();
        let fy = (local.y / self.spec.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.spec.width as f64 || fy >= self.spec.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// World coordinates of a cell center.
    pub fn center(&self, (ix, iy): Cell) -> Point2 {
        let r = self.spec.resolution;
        self.spec
            .origin
            .transform_point(&Point2::new((ix as f64 + 0.5) * r, (iy as f64 + 0.5) * r))
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.spec.width && (y as usize) < self.spec.height
    }

    /// Marks `Free` every cell not 4-connected to `seed` through free cells.
    /// Enclosed pockets (row interiors, the outside of the room) become
    /// `Occupied`.
    pub fn fill_unreachable(&mut self, seed: Cell) {
        let mut reached = vec![false; self.cells.len()];
        let mut queue = VecDeque::new();
        if self.is_free(seed) {
            reached[self.index(seed)] = true;
            queue.push_back(seed);
        }
        while let Some((x, y)) = queue.pop_front() {
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if !self.in_bounds(nx, ny) {
                    continue;
                }
                let n = (nx as usize, ny as usize);
                let i = self.index(n);
                if !reached[i] && self.cells[i] == CellState::Free {
                    reached[i] = true;
                    queue.push_back(n);
                }
            }
        }
        for (i, c) in self.cells.iter_mut().enumerate() {
            if *c == CellState::Free && !reached[i] {
                *c = CellState::Occupied;
            }
        }
    }
}

/// Occupied where at least one point falls, free elsewhere. Points outside
/// the grid are ignored.
pub fn rasterize(points: &[Point2], spec: GridSpec) -> Result<OccupancyGrid, SlamError> {
    let mut grid = OccupancyGrid::new(spec, CellState::Free)?;
    for p in points {
        if let Some(c) = grid.cell_of(p) {
            grid.set(c, CellState::Occupied);
        }
    }
    Ok(grid)
}

/// Grid over the room `[0, width] × [0, length]` with the map points
/// rasterized and every free cell not reachable from `seed` marked occupied.
/// The far walls land in the last row and column.
pub fn room_grid(
    points: &[Point2],
    width: f64,
    length: f64,
    resolution: f64,
    seed: &Point2,
) -> Result<OccupancyGrid, SlamError> {
    if !(resolution > 0.0 && width > 0.0 && length > 0.0) {
        return Err(SlamError::InvalidGrid("room and resolution must be positive".into()));
    }
    let spec = GridSpec {
        origin: crate::geometry::Pose2::identity(),
        resolution,
        width: (width / resolution).floor() as usize + 1,
        height: (length / resolution).floor() as usize + 1,
    };
    let mut grid = rasterize(points, spec)?;
    let cell = grid
        .cell_of(seed)
        .filter(|c| grid.is_free(*c))
        .ok_or_else(|| SlamError::InvalidGrid(format!("seed ({}, {}) is not a free cell", seed.x, seed.y)))?;
    grid.fill_unreachable(cell);
    Ok(grid)
}

/// Marks occupied every free cell whose center lies within `radius` of an
/// occupied cell's square.
pub fn inflate(grid: &OccupancyGrid, radius: f64) -> Result<OccupancyGrid, SlamError> {
    if !(radius >= 0.0) {
        return Err(SlamError::InvalidGrid("inflation radius must be >= 0".into()));
    }
    let mut out = grid.clone();
    if radius == 0.0 {
        return Ok(out);
    }
    let res = grid.resolution();
    let reach = (radius / res).ceil() as i64 + 1;
    for i in 0..grid.cells.len() {
        if grid.cells[i] != CellState::Occupied {
            continue;
        }
        let (ox, oy) = grid.cell_at_index(i);
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let (x, y) = (ox as i64 + dx, oy as i64 + dy);
                if !grid.in_bounds(x, y) {
                    continue;
                }
                let c = (x as usize, y as usize);
                if grid.get(c) != CellState::Free {
                    continue;
                }
                let gx = ((dx.abs() as f64) - 0.5).max(0.0) * res;
                let gy = ((dy.abs() as f64) - 0.5).max(0.0) * res;
                if gx.hypot(gy) <= radius + 1e-12 {
                    out.set(c, CellState::Occupied);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(w: usize, h: usize, res: f64) -> GridSpec {
        GridSpec {
            origin: Pose2::identity(),
            resolution: res,
            width: w,
            height: h,
        }
    }

    #[test]
    fn empty_cloud_is_free() {
        let g = rasterize(&[], spec(4, 3, 0.1)).unwrap();
        assert_eq!(g.count(CellState::Free), 12);
    }

    #[test]
    fn single_point_containment() {
        let g = rasterize(&[Point2::new(0.05, 0.05)], spec(5, 5, 0.1)).unwrap();
        assert_eq!(g.get((0, 0)), CellState::Occupied);
        assert_eq!(g.count(CellState::Occupied), 1);
    }

    #[test]
    fn segment_samples_fill_cells_under_it() {
        let pts: Vec<Point2> = (0..100).map(|i| Point2::new((i as f64 + 0.5) / 100.0, 0.0)).collect();
        let g = rasterize(&pts, spec(15, 3, 0.1)).unwrap();
        // Per-point floor-division oracle.
        let mut expected = std::collections::BTreeSet::new();
        for p in &pts {
            expected.insert(((p.x / 0.1).floor() as usize, (p.y / 0.1).floor() as usize));
        }
        assert_eq!(expected.len(), 10);
        for y in 0..3 {
            for x in 0..15 {
                assert_eq!(g.get((x, y)) == CellState::Occupied, expected.contains(&(x, y)));
            }
        }
    }

    #[test]
    fn bad_resolution_is_rejected() {
        assert!(rasterize(&[], spec(3, 3, 0.0)).is_err());
    }

    #[test]
    fn inflate_single_cell_by_one_cell() {
        let mut g = OccupancyGrid::new(spec(7, 7, 0.1), CellState::Free).unwrap();
        g.set((3, 3), CellState::Occupied);
        let out = inflate(&g, 0.1).unwrap();
        for y in 0..7usize {
            for x in 0..7usize {
                // Brute-force distance from cell center to the occupied square.
                let cx = (x as f64 + 0.5) * 0.1;
                let cy = (y as f64 + 0.5) * 0.1;
                let qx = cx.clamp(0.3, 0.4);
                let qy = cy.clamp(0.3, 0.4);
                let inside = (cx - qx).hypot(cy - qy) <= 0.1 + 1e-12;
                assert_eq!(out.get((x, y)) == CellState::Occupied, inside, "({x},{y})");
            }
        }
        assert_eq!(out.count(CellState::Occupied), 9);
    }

    #[test]
    fn inflate_identity_cases() {
        let mut g = OccupancyGrid::new(spec(5, 5, 0.1), CellState::Free).unwrap();
        g.set((1, 1), CellState::Occupied);
        assert_eq!(inflate(&g, 0.0).unwrap(), g);
        let full = OccupancyGrid::new(spec(5, 5, 0.1), CellState::Occupied).unwrap();
        assert_eq!(inflate(&full, 0.3).unwrap(), full);
    }

    #[test]
    fn pockets_are_closed() {
        let mut g = OccupancyGrid::new(spec(5, 5, 1.0), CellState::Free).unwrap();
        for (x, y) in [(2, 1), (1, 2), (3, 2), (2, 3)] {
            g.set((x, y), CellState::Occupied);
        }
        g.fill_unreachable((0, 0));
        assert_eq!(g.get((2, 2)), CellState::Occupied);
        assert_eq!(g.get((4, 4)), CellState::Free);
    }
}
