//! Grid shortest paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::slam::{Cell, OccupancyGrid};

use super::PlanningError;

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const MOVES: [(i64, i64, f64); 8] = [
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT_2),
    (-1, 1, SQRT_2),
    (1, -1, SQRT_2),
    (-1, -1, SQRT_2),
];

/// Admissible moves out of `cell` with their costs in cells. Diagonals may
/// not cut a blocked corner.
pub fn grid_moves(grid: &OccupancyGrid, cell: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
    let (x, y) = (cell.0 as i64, cell.1 as i64);
    let free = move |cx: i64, cy: i64| grid.in_bounds(cx, cy) && grid.is_free((cx as usize, cy as usize));
    MOVES.iter().filter_map(move |&(dx, dy, c)| {
        let (nx, ny) = (x + dx, y + dy);
        if !free(nx, ny) {
            return None;
        }
        if dx != 0 && dy != 0 && !(free(x + dx, y) && free(x, y + dy)) {
            return None;
        }
        Some(((nx as usize, ny as usize), c))
    })
}

/// 8-connected shortest path from `start` to `goal`, both inclusive. Cost is
/// in cells (1 per axis step, √2 per diagonal).
pub fn dijkstra_path(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<Vec<Cell>, PlanningError> {
    for c in [start, goal] {
        if c.0 >= grid.width() || c.1 >= grid.height() || !grid.is_free(c) {
            return Err(PlanningError::BlockedEndpoint(c));
        }
    }
    let n = grid.width() * grid.height();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let (s, g) = (grid.index(start), grid.index(goal));
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Entry(0.0, s));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == g {
            break;
        }
        for (next, c) in grid_moves(grid, grid.cell_at_index(u)) {
            let v = grid.index(next);
            let nd = d + c;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Entry(nd, v));
            }
        }
    }
    if !dist[g].is_finite() {
        return Err(PlanningError::NoPath);
    }
    let mut path = vec![goal];
    let mut u = g;
    while u != s {
        u = prev[u];
        path.push(grid.cell_at_index(u));
    }
    path.reverse();
    Ok(path)
}

/// Cost of a cell path in cells.
pub fn path_cost(path: &[Cell]) -> f64 {
    path.windows(2)
        .map(|w| {
            let diag = w[0].0 != w[1].0 && w[0].1 != w[1].1;
            if diag {
                SQRT_2
            } else {
                1.0
            }
        })
        .sum()
}
