//! Planar geometry shared by every subsystem: SE(2) poses, segments and ray
//! casting.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

/// A point in the plane, in meters.
pub type Point2 = nalgebra::Point2<f64>;

/// A point in space, in meters. Only flower positions and the arm use the
/// height coordinate.
pub type Point3 = nalgebra::Point3<f64>;

/// An unordered set of planar points.
pub type PointCloud2 = Vec<Point2>;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    if wrapped <= -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

/// Rotation matrix for a planar heading.
pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// A rigid planar transform, also used as a robot pose in a fixed frame.
///
/// `theta` is always kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn translation(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// `self ∘ other`: applies `other` expressed in the frame of `self`.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    /// Pose of `other` expressed in the frame of `self`, i.e. `self⁻¹ ∘ other`.
    pub fn between(&self, other: &Pose2) -> Pose2 {
        self.inverse().compose(other)
    }

    /// Maps a point from this pose's local frame into the parent frame.
    pub fn transform_point(&self, p: &Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(self.x + c * p.x - s * p.y, self.y + s * p.x + c * p.y)
    }

    /// Maps a point from the parent frame into this pose's local frame.
    pub fn inverse_transform_point(&self, p: &Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }

    pub fn distance_to(&self, other: &Pose2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn heading_vector(&self) -> Vector2<f64> {
        Vector2::new(self.theta.cos(), self.theta.sin())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// A closed planar segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn direction(&self) -> Vector2<f64> {
        (self.b - self.a).normalize()
    }

    pub fn point_at(&self, t: f64) -> Point2 {
        self.a + (self.b - self.a) * t
    }

    /// Closest distance from `p` to the segment.
    pub fn distance_to_point(&self, p: &Point2) -> f64 {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        if len2 == 0.0 {
            return (p - self.a).norm();
        }
        let t = ((p - self.a).dot(&ab) / len2).clamp(0.0, 1.0);
        (p - self.point_at(t)).norm()
    }

    /// Intersection parameter `t ≥ 0` along the ray `origin + t·dir`, if the
    /// ray meets the segment. Parallel overlap is reported at the nearer
    /// endpoint.
    pub fn ray_intersection(&self, origin: &Point2, dir: &Vector2<f64>) -> Option<f64> {
        let e = self.b - self.a;
        let denom = cross(dir, &e);
        let w = self.a - origin;
        if denom.abs() < 1e-15 {
            if cross(&w, dir).abs() > 1e-12 {
                return None;
            }
            // Collinear: nearest endpoint ahead of the origin.
            let dd = dir.norm_squared();
            let ta = w.dot(dir) / dd;
            let tb = (self.b - origin).dot(dir) / dd;
            let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
            if hi < 0.0 {
                return None;
            }
            return Some(lo.max(0.0));
        }
        let t = cross(&w, &e) / denom;
        let u = cross(&w, dir) / denom;
        if t >= 0.0 && (0.0..=1.0).contains(&u) {
            Some(t)
        } else {
            None
        }
    }

    pub fn intersects(&self, other: &Segment) -> bool {
        let d1 = orient(&other.a, &other.b, &self.a);
        let d2 = orient(&other.a, &other.b, &self.b);
        let d3 = orient(&self.a, &self.b, &other.a);
        let d4 = orient(&self.a, &self.b, &other.b);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
            return true;
        }
        (d1 == 0.0 && on_segment(&other.a, &other.b, &self.a))
            || (d2 == 0.0 && on_segment(&other.a, &other.b, &self.b))
            || (d3 == 0.0 && on_segment(&self.a, &self.b, &other.a))
            || (d4 == 0.0 && on_segment(&self.a, &self.b, &other.b))
    }

    pub fn distance_to_segment(&self, other: &Segment) -> f64 {
        if self.intersects(other) {
            return 0.0;
        }
        self.distance_to_point(&other.a)
            .min(self.distance_to_point(&other.b))
            .min(other.distance_to_point(&self.a))
            .min(other.distance_to_point(&self.b))
    }
}

/// Evenly spaced samples along each segment, endpoints included.
pub fn sample_segments(segments: &[Segment], spacing: f64) -> Vec<Point2> {
    let mut out = Vec::new();
    for s in segments {
        let n = (s.length() / spacing).ceil().max(1.0) as usize;
        for i in 0..=n {
            out.push(s.point_at(i as f64 / n as f64));
        }
    }
    out
}

pub(crate) fn cross(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

fn orient(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    cross(&(b - a), &(c - a))
}

fn on_segment(a: &Point2, b: &Point2, p: &Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Nearest hit of a ray against a set of segments, as `(distance, index)`.
pub fn cast_ray(origin: &Point2, heading: f64, segments: &[Segment], max_range: f64) -> Option<(f64, usize)> {
    let dir = Vector2::new(heading.cos(), heading.sin());
    segments
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.ray_intersection(origin, &dir).map(|t| (t, i)))
        .filter(|(t, _)| *t <= max_range)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
}

/// True when `p` lies inside (or on) the convex polygon given in
/// counter-clockwise or clockwise order.
pub fn point_in_convex_polygon(p: &Point2, poly: &[Point2]) -> bool {
    let n = poly.len();
    let mut sign = 0.0f64;
    for i in 0..n {
        let o = orient(&poly[i], &poly[(i + 1) % n], p);
        if o != 0.0 {
            if sign == 0.0 {
                sign = o.signum();
            } else if o.signum() != sign {
                return false;
            }
        }
    }
    true
}

/// Edges of a closed polygon.
pub fn polygon_edges(poly: &[Point2]) -> Vec<Segment> {
    (0..poly.len())
        .map(|i| Segment::new(poly[i], poly[(i + 1) % poly.len()]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_pose(p: Pose2, x: f64, y: f64, theta: f64, tol: f64) {
        assert!((p.x - x).abs() < tol, "{p:?}");
        assert!((p.y - y).abs() < tol, "{p:?}");
        assert!(wrap_angle(p.theta - theta).abs() < tol, "{p:?}");
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn compose_identity_and_inverse() {
        let b = Pose2::new(0.3, -1.2, 2.0);
        assert_eq!(Pose2::identity().compose(&b), b);
        let a = Pose2::new(1.5, 2.5, -2.9);
        assert_pose(a.compose(&a.inverse()), 0.0, 0.0, 0.0, 1e-12);
    }

    #[test]
    fn compose_quarter_turn() {
        let p = Pose2::new(1.0, 0.0, PI / 2.0).compose(&Pose2::new(1.0, 0.0, 0.0));
        assert_pose(p, 1.0, 1.0, PI / 2.0, 1e-12);
    }

    #[test]
    fn ray_hits_segment() {
        let s = Segment::new(Point2::new(3.0, -1.0), Point2::new(3.0, 1.0));
        let t = s.ray_intersection(&Point2::origin(), &Vector2::new(1.0, 0.0)).unwrap();
        assert!((t - 3.0).abs() < 1e-12);
        assert!(s
            .ray_intersection(&Point2::origin(), &Vector2::new(-1.0, 0.0))
            .is_none());
    }

    #[test]
    fn segment_distance() {
        let a = Segment::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        let b = Segment::new(Point2::new(0.0, 2.0), Point2::new(1.0, 2.0));
        assert!((a.distance_to_segment(&b) - 2.0).abs() < 1e-12);
        let c = Segment::new(Point2::new(0.5, -1.0), Point2::new(0.5, 1.0));
        assert_eq!(a.distance_to_segment(&c), 0.0);
    }
}
