//! Greedy coverage of the required roadmap edges.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

use super::voronoi::VoronoiGraph;
use super::PlanningError;

/// One edge traversal, `from` → `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteStep {
    pub edge: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionRoute {
    /// Visited nodes, starting with the start node.
    pub nodes: Vec<usize>,
    pub steps: Vec<RouteStep>,
    pub length: f64,
}

impl InspectionRoute {
    /// Distinct edges traversed at least once.
    pub fn covered(&self) -> BTreeSet<usize> {
        self.steps.iter().map(|s| s.edge).collect()
    }

    /// Dense polyline following every traversed edge in travel direction.
    pub fn polyline(&self, graph: &VoronoiGraph) -> Vec<Point2> {
        let mut out: Vec<Point2> = self.nodes.first().map(|&n| vec![graph.nodes[n]]).unwrap_or_default();
        for step in &self.steps {
            let e = &graph.edges[step.edge];
            let pts: Box<dyn Iterator<Item = &Point2>> = if step.from == e.a {
                Box::new(e.points.iter())
            } else {
                Box::new(e.points.iter().rev())
            };
            out.extend(pts.skip(1));
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    // Min-heap on (cost, node).
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths over the roadmap. Returns distances and the
/// incoming edge of every reached node.
pub fn graph_dijkstra(graph: &VoronoiGraph, source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let adj = graph.adjacency();
    let n = graph.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut via = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &e in &adj[u] {
            let v = graph.edges[e].other(u);
            let nd = d + graph.edges[e].length;
            if nd < dist[v] {
                dist[v] = nd;
                via[v] = Some(e);
                heap.push(Entry(nd, v));
            }
        }
    }
    (dist, via)
}

/// Repeatedly drives to the nearest endpoint of an uncovered required edge
/// and traverses it. Required edges crossed in transit count as covered.
pub fn plan_inspection(graph: &VoronoiGraph, start_node: usize) -> Result<InspectionRoute, PlanningError> {
    if start_node >= graph.nodes.len() {
        return Err(PlanningError::Unreachable);
    }
    let mut uncovered: BTreeSet<usize> = graph.required_edges().into_iter().collect();
    let mut route = InspectionRoute {
        nodes: vec![start_node],
        steps: Vec::new(),
        length: 0.0,
    };
    let mut current = start_node;
    while !uncovered.is_empty() {
        let (dist, via) = graph_dijkstra(graph, current);
        let mut best: Option<(f64, usize, usize)> = None;
        for &e in &uncovered {
            let edge = &graph.edges[e];
            for end in [edge.a, edge.b] {
                let d = dist[end];
                if d.is_finite() && best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, e, end));
                }
            }
        }
        let (_, e, entry) = best.ok_or(PlanningError::Unreachable)?;

        let mut approach = Vec::new();
        let mut node = entry;
        while node != current {
            let via_edge = via[node].expect("reached node has a predecessor");
            let prev = graph.edges[via_edge].other(node);
            approach.push(RouteStep {
                edge: via_edge,
                from: prev,
                to: node,
            });
            node = prev;
        }
        approach.reverse();
        approach.push(RouteStep {
            edge: e,
            from: entry,
            to: graph.edges[e].other(entry),
        });
        for step in approach {
            uncovered.remove(&step.edge);
            route.length += graph.edges[step.edge].length;
            route.nodes.push(step.to);
            route.steps.push(step);
            current = step.to;
        }
    }
    Ok(route)
}
