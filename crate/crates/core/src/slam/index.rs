use std::collections::HashMap;

use crate::geometry::Point2;

/// Uniform-grid spatial hash answering exact nearest-neighbour queries
/// within a bounded radius.
#[derive(Debug, Clone)]
pub struct PointIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
    points: Vec<Point2>,
}

impl PointIndex {
    pub fn new(points: &[Point2], cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(key(p, cell)).or_default().push(i as u32);
        }
        Self {
            cell,
            buckets,
            points: points.to_vec(),
        }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest point within `radius` of `q` as `(index, distance)`. Ties go
    /// to the lower index.
    pub fn nearest_within(&self, q: &Point2, radius: f64) -> Option<(usize, f64)> {
        let (kx, ky) = key(q, self.cell);
        let reach = (radius / self.cell).ceil() as i64;
        let r2 = radius * radius;
        let mut best: Option<(usize, f64)> = None;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                let Some(bucket) = self.buckets.get(&(kx + dx, ky + dy)) else {
                    continue;
                };
                for &i in bucket {
                    let d2 = (self.points[i as usize] - q).norm_squared();
                    if d2 > r2 {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bi, bd)) => d2 < bd || (d2 == bd && (i as usize) < bi),
                    };
                    if better {
                        best = Some((i as usize, d2));
                    }
                }
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }
}

fn key(p: &Point2, cell: f64) -> (i64, i64) {
    ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
}
