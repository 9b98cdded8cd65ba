//! Roadmap along the medial ridge of free space.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::slam::OccupancyGrid;
use crate::world::{RowGeometry, Side};

use super::distance::DistanceField;
use super::PlanningError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoronoiParams {
    /// Ridge cells closer than this to an obstacle are dropped, meters.
    pub min_clearance: f64,
    /// Non-required dead-end edges shorter than this are pruned, meters.
    pub prune_length: f64,
    /// Parking offset from the row centerline; edges within 1.5 times this
    /// of a face are required for that face.
    pub parking_offset: f64,
}

impl Default for VoronoiParams {
    fn default() -> Self {
        Self {
            min_clearance: 0.3,
            prune_length: 0.6,
            parking_offset: crate::world::DEFAULT_PARKING_OFFSET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiEdge {
    pub a: usize,
    pub b: usize,
    /// Polyline from node `a` to node `b`.
    pub points: Vec<Point2>,
    pub length: f64,
}

impl VoronoiEdge {
    pub fn other(&self, node: usize) -> usize {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiGraph {
    pub nodes: Vec<Point2>,
    pub edges: Vec<VoronoiEdge>,
    /// Edges flanking each row side.
    pub required: BTreeMap<(u32, Side), Vec<usize>>,
    /// Centers of the thinned ridge cells, for rendering.
    pub ridge: Vec<Point2>,
}

impl VoronoiGraph {
    /// Distinct required edge ids in ascending order.
    pub fn required_edges(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.required.values().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Incident edge ids per node.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.a].push(i);
            if e.b != e.a {
                adj[e.b].push(i);
            }
        }
        adj
    }

    /// Closest node to `p`, lowest index on ties.
    pub fn nearest_node(&self, p: &Point2) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = (n - p).norm();
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Builds the ridge roadmap of `grid` and tags the edges that flank each row
/// side. Non-free cells and the grid border are obstacles.
pub fn build_voronoi(
    grid: &OccupancyGrid,
    rows: &[RowGeometry],
    params: &VoronoiParams,
) -> Result<VoronoiGraph, PlanningError> {
    let (w, h) = (grid.width(), grid.height());
    if !grid.states().contains(&crate::slam::CellState::Free) {
        return Err(PlanningError::NoFreeSpace);
    }
    let field = DistanceField::new(grid);
    let min_cells = params.min_clearance / grid.resolution();

    // Ridge: neighbouring free cells whose nearest obstacles are more than
    // two cells apart; the cell with the larger clearance is kept.
    let mut ridge = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !grid.is_free((x, y)) || field.cells((x, y)) < min_cells {
                continue;
            }
            let fp = field.feature((x, y));
            let dp = field.cells((x, y));
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if !grid.in_bounds(nx, ny) || !grid.is_free((nx as usize, ny as usize)) {
                    continue;
                }
                let q = (nx as usize, ny as usize);
                let fq = field.feature(q);
                let sep = (((fp.0 - fq.0).pow(2) + (fp.1 - fq.1).pow(2)) as f64).sqrt();
                if sep > 2.0 && dp >= field.cells(q) {
                    ridge[y * w + x] = true;
                    break;
                }
            }
        }
    }
    thin(&mut ridge, w, h);
    remove_staircases(&mut ridge, w, h);

    let centers = |i: usize| grid.center((i % w, i / w));
    let mut graph = extract_graph(&ridge, w, h, &centers);
    graph.ridge = (0..w * h).filter(|&i| ridge[i]).map(centers).collect();

    split_at_faces(&mut graph, rows, params.parking_offset);
    tag_required(&mut graph, rows, params.parking_offset);
    prune_leaves(&mut graph, params.prune_length);
    merge_chains(&mut graph, rows, params.parking_offset);
    tag_required(&mut graph, rows, params.parking_offset);
    Ok(graph)
}

fn neighbours8(i: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = ((i % w) as i64, (i / w) as i64);
    [
        (-1i64, -1i64),
        (0, -1),
        (1, -1),
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
    ]
    .into_iter()
    .filter_map(move |(dx, dy)| {
        let (nx, ny) = (x + dx, y + dy);
        (nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h).then(|| ny as usize * w + nx as usize)
    })
}

/// Zhang-Suen thinning to unit width.
fn thin(mask: &mut [bool], w: usize, h: usize) {
    let at = |m: &[bool], x: i64, y: i64| -> bool {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && m[y as usize * w + x as usize]
    };
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for y in 0..h as i64 {
                for x in 0..w as i64 {
                    if !at(mask, x, y) {
                        continue;
                    }
                    // P2..P9 clockwise from north.
                    let p = [
                        at(mask, x, y - 1),
                        at(mask, x + 1, y - 1),
                        at(mask, x + 1, y),
                        at(mask, x + 1, y + 1),
                        at(mask, x, y + 1),
                        at(mask, x - 1, y + 1),
                        at(mask, x - 1, y),
                        at(mask, x - 1, y - 1),
                    ];
                    let b = p.iter().filter(|&&v| v).count();
                    let a = (0..8).filter(|&k| !p[k] && p[(k + 1) % 8]).count();
                    let (c1, c2) = if pass == 0 {
                        (!(p[0] && p[2] && p[4]), !(p[2] && p[4] && p[6]))
                    } else {
                        (!(p[0] && p[2] && p[6]), !(p[0] && p[4] && p[6]))
                    };
                    if (2..=6).contains(&b) && a == 1 && c1 && c2 {
                        remove.push(y as usize * w + x as usize);
                    }
                }
            }
            changed |= !remove.is_empty();
            for i in remove {
                mask[i] = false;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Drops corner cells of 4-connected staircases: a cell with exactly two
/// neighbours that touch each other is redundant for 8-connectivity.
fn remove_staircases(mask: &mut [bool], w: usize, h: usize) {
    loop {
        let mut changed = false;
        for i in 0..mask.len() {
            if !mask[i] {
                continue;
            }
            let nb: Vec<usize> = neighbours8(i, w, h).filter(|&j| mask[j]).collect();
            if nb.len() == 2 && neighbours8(nb[0], w, h).any(|k| k == nb[1]) {
                mask[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

fn extract_graph(mask: &[bool], w: usize, h: usize, center: &dyn Fn(usize) -> Point2) -> VoronoiGraph {
    let degree = |i: usize| neighbours8(i, w, h).filter(|&j| mask[j]).count();
    let mut cluster = vec![usize::MAX; mask.len()];
    let mut nodes: Vec<Point2> = Vec::new();

    // Junction and endpoint cells, junctions merged with touching junctions.
    for i in 0..mask.len() {
        if !mask[i] || cluster[i] != usize::MAX {
            continue;
        }
        let d = degree(i);
        if d == 2 || d == 0 {
            continue;
        }
        let id = nodes.len();
        let mut members = vec![i];
        cluster[i] = id;
        if d > 2 {
            let mut queue = VecDeque::from([i]);
            while let Some(c) = queue.pop_front() {
                for n in neighbours8(c, w, h) {
                    if mask[n] && cluster[n] == usize::MAX && degree(n) > 2 {
                        cluster[n] = id;
                        members.push(n);
                        queue.push_back(n);
                    }
                }
            }
        }
        let sum = members
            .iter()
            .fold(nalgebra::Vector2::zeros(), |acc, &m| acc + center(m).coords);
        nodes.push(Point2::from(sum / members.len() as f64));
    }

    let mut edges: Vec<VoronoiEdge> = Vec::new();
    let mut visited = vec![false; mask.len()];
    let mut direct: std::collections::BTreeSet<(usize, usize)> = Default::default();

    let trace = |start_cell: usize,
                 first: usize,
                 cluster: &[usize],
                 visited: &mut [bool],
                 nodes: &[Point2]|
     -> Option<(usize, Vec<Point2>)> {
        let mut pts = vec![nodes[cluster[start_cell]], center(first)];
        visited[first] = true;
        let (mut prev, mut cur) = (start_cell, first);
        loop {
            let next = neighbours8(cur, w, h).find(|&n| mask[n] && n != prev)?;
            if cluster[next] != usize::MAX {
                // Two-cell hop back into the starting junction.
                if cluster[next] == cluster[start_cell] && pts.len() == 2 {
                    return None;
                }
                pts.push(nodes[cluster[next]]);
                return Some((cluster[next], pts));
            }
            if visited[next] {
                return None;
            }
            visited[next] = true;
            pts.push(center(next));
            prev = cur;
            cur = next;
        }
    };

    for i in 0..mask.len() {
        if cluster[i] == usize::MAX {
            continue;
        }
        for n in neighbours8(i, w, h) {
            if !mask[n] {
                continue;
            }
            if cluster[n] != usize::MAX {
                let (a, b) = (cluster[i].min(cluster[n]), cluster[i].max(cluster[n]));
                if a != b && direct.insert((a, b)) {
                    edges.push(make_edge(a, b, vec![nodes[a], nodes[b]]));
                }
                continue;
            }
            if visited[n] {
                continue;
            }
            if let Some((end, pts)) = trace(i, n, &cluster, &mut visited, &nodes) {
                edges.push(make_edge(cluster[i], end, pts));
            }
        }
    }

    // Pure cycles without junctions: seed a node on the first unvisited cell.
    for i in 0..mask.len() {
        if !mask[i] || cluster[i] != usize::MAX || visited[i] || degree(i) != 2 {
            continue;
        }
        let id = nodes.len();
        nodes.push(center(i));
        cluster[i] = id;
        let first = neighbours8(i, w, h).find(|&n| mask[n]).expect("degree 2");
        if let Some((end, pts)) = trace(i, first, &cluster, &mut visited, &nodes) {
            edges.push(make_edge(id, end, pts));
        }
    }

    VoronoiGraph {
        nodes,
        edges,
        required: BTreeMap::new(),
        ridge: Vec::new(),
    }
}

fn make_edge(a: usize, b: usize, points: Vec<Point2>) -> VoronoiEdge {
    let length = points.windows(2).map(|p| (p[1] - p[0]).norm()).sum();
    VoronoiEdge { a, b, points, length }
}

/// An edge is required for a row side when at least half of its points lie
/// beside that face (projecting inside the row span) and within
/// `1.5 × parking_offset` of the face, on its outward side.
pub fn tag_required(graph: &mut VoronoiGraph, rows: &[RowGeometry], parking_offset: f64) {
    graph.required.clear();
    for row in rows {
        for side in Side::BOTH {
            let ids: Vec<usize> = graph
                .edges
                .iter()
                .enumerate()
                .filter(|(_, e)| flanks(e, row, side, parking_offset))
                .map(|(i, _)| i)
                .collect();
            graph.required.insert((row.id, side), ids);
        }
    }
}

fn beside(p: &Point2, row: &RowGeometry, side: Side, parking_offset: f64) -> bool {
    let s = row.project(p);
    let off = row.lateral_offset(p) * side.sign() - row.half_width;
    (0.0..=row.length).contains(&s) && off > 0.0 && off <= 1.5 * parking_offset
}

fn flanks(edge: &VoronoiEdge, row: &RowGeometry, side: Side, parking_offset: f64) -> bool {
    let n = edge
        .points
        .iter()
        .filter(|p| beside(p, row, side, parking_offset))
        .count();
    !edge.points.is_empty() && 2 * n >= edge.points.len()
}

/// Faces a point lies beside, as a bitmask over `(row index, side)`.
fn face_mask(p: &Point2, rows: &[RowGeometry], parking_offset: f64) -> u128 {
    let mut mask = 0u128;
    for (i, row) in rows.iter().enumerate().take(64) {
        for (k, side) in Side::BOTH.into_iter().enumerate() {
            if beside(p, row, side, parking_offset) {
                mask |= 1 << (2 * i + k);
            }
        }
    }
    mask
}

fn edge_mask(edge: &VoronoiEdge, rows: &[RowGeometry], parking_offset: f64) -> u128 {
    let mut mask = 0u128;
    for (i, row) in rows.iter().enumerate().take(64) {
        for (k, side) in Side::BOTH.into_iter().enumerate() {
            if flanks(edge, row, side, parking_offset) {
                mask |= 1 << (2 * i + k);
            }
        }
    }
    mask
}

/// Splits edges where the set of flanked faces changes, so that a ridge
/// wrapping around a row end yields a separate edge along each face. Runs
/// shorter than `MIN_RUN` points are absorbed by the preceding run.
fn split_at_faces(graph: &mut VoronoiGraph, rows: &[RowGeometry], parking_offset: f64) {
    const MIN_RUN: usize = 4;
    let edges = std::mem::take(&mut graph.edges);
    for edge in edges {
        let masks: Vec<u128> = edge.points.iter().map(|p| face_mask(p, rows, parking_offset)).collect();
        // Run boundaries as (start index, mask).
        let mut runs: Vec<(usize, u128)> = Vec::new();
        let mut i = 0;
        while i < masks.len() {
            let mut j = i;
            while j < masks.len() && masks[j] == masks[i] {
                j += 1;
            }
            match runs.last() {
                Some(&(_, m)) if j - i < MIN_RUN || m == masks[i] => {}
                _ => runs.push((i, masks[i])),
            }
            i = j;
        }
        if runs.len() <= 1 {
            graph.edges.push(edge);
            continue;
        }
        let mut from = edge.a;
        let mut start = 0;
        for (k, &(begin, _)) in runs.iter().enumerate().skip(1) {
            let cut = begin.max(start + 1).min(edge.points.len() - 2);
            if cut <= start {
                continue;
            }
            let node = graph.nodes.len();
            graph.nodes.push(edge.points[cut]);
            graph
                .edges
                .push(make_edge(from, node, edge.points[start..=cut].to_vec()));
            from = node;
            start = cut;
            let _ = k;
        }
        graph.edges.push(make_edge(from, edge.b, edge.points[start..].to_vec()));
    }
}

/// Repeatedly removes short dead-end edges that no row side requires.
fn prune_leaves(graph: &mut VoronoiGraph, prune_length: f64) {
    let required: std::collections::BTreeSet<usize> = graph.required_edges().into_iter().collect();
    let mut keep: Vec<bool> = vec![true; graph.edges.len()];
    loop {
        let mut degree = vec![0usize; graph.nodes.len()];
        for (i, e) in graph.edges.iter().enumerate() {
            if keep[i] {
                degree[e.a] += 1;
                degree[e.b] += 1;
            }
        }
        let mut changed = false;
        for (i, e) in graph.edges.iter().enumerate() {
            if !keep[i] || required.contains(&i) || e.length >= prune_length || e.a == e.b {
                continue;
            }
            // Never strip the last edge of a component.
            if (degree[e.a] == 1) != (degree[e.b] == 1) {
                keep[i] = false;
                degree[e.a] -= 1;
                degree[e.b] -= 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let edges = std::mem::take(&mut graph.edges);
    graph.edges = edges
        .into_iter()
        .zip(keep)
        .filter_map(|(e, k)| k.then_some(e))
        .collect();
    compact_nodes(graph);
}

/// Joins the two edges meeting at a node of degree two when they flank the
/// same faces.
fn merge_chains(graph: &mut VoronoiGraph, rows: &[RowGeometry], parking_offset: f64) {
    loop {
        let adj = graph.adjacency();
        let Some(node) = (0..graph.nodes.len()).find(|&n| {
            adj[n].len() == 2 && adj[n][0] != adj[n][1] && {
                let (e0, e1) = (&graph.edges[adj[n][0]], &graph.edges[adj[n][1]]);
                e0.a != e0.b
                    && e1.a != e1.b
                    && edge_mask(e0, rows, parking_offset) == edge_mask(e1, rows, parking_offset)
            }
        }) else {
            break;
        };
        let (i, j) = (adj[node][0], adj[node][1]);
        let mut first = graph.edges[i].clone();
        let mut second = graph.edges[j].clone();
        if first.b != node {
            first.points.reverse();
            std::mem::swap(&mut first.a, &mut first.b);
        }
        if second.a != node {
            second.points.reverse();
            std::mem::swap(&mut second.a, &mut second.b);
        }
        let mut points = first.points;
        points.extend(second.points.into_iter().skip(1));
        let merged = make_edge(first.a, second.b, points);
        let (lo, hi) = (i.min(j), i.max(j));
        graph.edges.remove(hi);
        graph.edges[lo] = merged;
    }
    compact_nodes(graph);
}

/// Drops nodes without edges and renumbers.
fn compact_nodes(graph: &mut VoronoiGraph) {
    let mut used = vec![false; graph.nodes.len()];
    for e in &graph.edges {
        used[e.a] = true;
        used[e.b] = true;
    }
    let mut remap = vec![usize::MAX; graph.nodes.len()];
    let mut nodes = Vec::new();
    for (i, n) in graph.nodes.iter().enumerate() {
        if used[i] {
            remap[i] = nodes.len();
            nodes.push(*n);
        }
    }
    for e in &mut graph.edges {
        e.a = remap[e.a];
        e.b = remap[e.b];
    }
    graph.nodes = nodes;
}
