use serde::{Deserialize, Serialize};

use super::orient;
use crate::error::{Error, Result};

/// Coordinates are meters from the study origin; anything this far out is
/// a projection mistake, not a metropolitan area.
pub const MAX_COORD: f64 = 1e7;

/// Sine of the turning angle below which a vertex counts as collinear.
const COLLINEAR_SIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        PlanarPoint { x, y }
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &PlanarPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.x.abs() < MAX_COORD && self.y.abs() < MAX_COORD
    }
}

impl From<(f64, f64)> for PlanarPoint {
    fn from((x, y): (f64, f64)) -> Self {
        PlanarPoint { x, y }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: PlanarPoint,
    pub max: PlanarPoint,
}

impl Aabb {
    pub fn of(points: &[PlanarPoint]) -> Self {
        let mut min = PlanarPoint::new(f64::INFINITY, f64::INFINITY);
        let mut max = PlanarPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Aabb { min, max }
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: PlanarPoint) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// A simple polygon without holes, stored counter-clockwise with no
/// repeated or collinear vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplePolygon {
    vertices: Vec<PlanarPoint>,
    #[serde(skip)]
    area: f64,
    #[serde(skip)]
    bounds: Aabb,
}

impl SimplePolygon {
    /// Validates and normalizes a ring. A closing vertex equal to the first
    /// one is dropped, clockwise rings are reversed.
    pub fn new(vertices: Vec<PlanarPoint>) -> Result<Self> {
        Self::build(vertices, true)
    }

    /// Like [`SimplePolygon::new`] but skips the O(n²) self-intersection
    /// scan. Only for rings that are simple by construction (convex clips,
    /// star-shaped wedges).
    pub(crate) fn new_unchecked_simple(vertices: Vec<PlanarPoint>) -> Result<Self> {
        Self::build(vertices, false)
    }

    fn build(mut vertices: Vec<PlanarPoint>, check_simple: bool) -> Result<Self> {
        if let Some(bad) = vertices.iter().find(|p| !p.is_valid()) {
            return Err(Error::geometry(format!(
                "vertex ({}, {}) is not finite or out of range",
                bad.x, bad.y
            )));
        }
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        cleanup_ring(&mut vertices);
        if vertices.len() < 3 {
            return Err(Error::geometry("degenerate ring: fewer than 3 distinct non-collinear vertices"));
        }
        let mut area = signed_area(&vertices);
        if area < 0.0 {
            vertices.reverse();
            area = -area;
        }
        let bounds = Aabb::of(&vertices);
        let scale = bounds.width().max(bounds.height());
        if !(area > 1e-14 * scale * scale) {
            return Err(Error::geometry("degenerate ring: zero area"));
        }
        if check_simple {
            if let Some((i, j)) = find_self_intersection(&vertices) {
                return Err(Error::geometry(format!("ring self-intersects (edges {i} and {j})")));
            }
        }
        Ok(SimplePolygon { vertices, area, bounds })
    }

    /// Axis-aligned rectangle from two corners.
    pub fn rectangle(min: PlanarPoint, max: PlanarPoint) -> Result<Self> {
        Self::new(vec![
            min,
            PlanarPoint::new(max.x, min.y),
            max,
            PlanarPoint::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[PlanarPoint] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn edges(&self) -> impl Iterator<Item = (PlanarPoint, PlanarPoint)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| orient(self.vertices[i], self.vertices[(i + 1) % n], self.vertices[(i + 2) % n]) > 0.0)
    }

    pub fn centroid(&self) -> PlanarPoint {
        let o = self.vertices[0];
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for (p, q) in self.edges() {
            let (px, py) = (p.x - o.x, p.y - o.y);
            let (qx, qy) = (q.x - o.x, q.y - o.y);
            let c = px * qy - qx * py;
            cx += (px + qx) * c;
            cy += (py + qy) * c;
            a2 += c;
        }
        PlanarPoint::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
    }

    /// Even-odd point membership. Points exactly on the boundary may land
    /// on either side.
    pub fn contains(&self, p: PlanarPoint) -> bool {
        if !self.bounds.contains(p) {
            return false;
        }
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[j];
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Membership including the boundary (within `tol` meters).
    pub fn contains_or_touches(&self, p: PlanarPoint, tol: f64) -> bool {
        self.contains(p) || self.edges().any(|(a, b)| point_segment_distance(p, a, b) <= tol)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self> {
        Self::new(self.vertices.iter().map(|p| PlanarPoint::new(p.x + dx, p.y + dy)).collect())
    }
}

pub(crate) fn point_segment_distance(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(&PlanarPoint::new(a.x + t * dx, a.y + t * dy))
}

/// Shoelace area relative to the first vertex (keeps precision far from the origin).
pub(crate) fn signed_area(v: &[PlanarPoint]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let o = v[0];
    let mut s = 0.0;
    for i in 1..n - 1 {
        s += orient(o, v[i], v[i + 1]);
    }
    0.5 * s
}

/// Drops repeated vertices, spikes and collinear vertices until stable.
pub(crate) fn cleanup_ring(v: &mut Vec<PlanarPoint>) {
    let bounds = Aabb::of(v);
    let tol = 1e-12 * bounds.width().max(bounds.height()).max(1.0);
    loop {
        let n = v.len();
        if n < 3 {
            return;
        }
        let mut removed = false;
        let mut i = 0;
        while i < v.len() && v.len() >= 3 {
            let n = v.len();
            let prev = v[(i + n - 1) % n];
            let cur = v[i];
            let next = v[(i + 1) % n];
            let l1 = prev.distance(&cur);
            let l2 = cur.distance(&next);
            let degenerate = l1 <= tol || {
                let cross = orient(prev, cur, next);
                l2 <= tol || cross.abs() <= COLLINEAR_SIN * l1 * l2
            };
            if degenerate {
                v.remove(i);
                removed = true;
            } else {
                i += 1;
            }
        }
        if !removed {
            return;
        }
    }
}

fn segments_intersect(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint, d: PlanarPoint) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: PlanarPoint, q: PlanarPoint, r: PlanarPoint, o: f64| {
        o == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

fn find_self_intersection(v: &[PlanarPoint]) -> Option<(usize, usize)> {
    let n = v.len();
    if n < 4 {
        return None;
    }
    let boxes: Vec<Aabb> = (0..n).map(|i| Aabb::of(&[v[i], v[(i + 1) % n]])).collect();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if !boxes[i].intersects(&boxes[j]) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(c: &[(f64, f64)]) -> Vec<PlanarPoint> {
        c.iter().copied().map(PlanarPoint::from).collect()
    }

    #[test]
    fn unit_square_area() {
        let sq = SimplePolygon::new(pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])).unwrap();
        assert_eq!(sq.area(), 1.0);
        assert!(sq.is_convex());
    }

    #[test]
    fn right_triangle_area() {
        let t = SimplePolygon::new(pts(&[(0., 0.), (3., 0.), (0., 4.)])).unwrap();
        assert_eq!(t.area(), 6.0);
    }

    #[test]
    fn clockwise_ring_is_reoriented() {
        let p = SimplePolygon::new(pts(&[(0., 0.), (0., 1.), (1., 1.), (1., 0.)])).unwrap();
        assert_eq!(p.area(), 1.0);
        assert!(signed_area(p.vertices()) > 0.0);
    }

    #[test]
    fn closing_vertex_and_collinear_points_are_dropped() {
        let p = SimplePolygon::new(pts(&[(0., 0.), (0.5, 0.), (1., 0.), (1., 1.), (0., 1.), (0., 0.)])).unwrap();
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn degenerate_rings_are_rejected() {
        assert!(SimplePolygon::new(pts(&[(0., 0.), (1., 0.), (2., 0.)])).is_err());
        assert!(SimplePolygon::new(pts(&[(0., 0.), (1., 1.)])).is_err());
        assert!(SimplePolygon::new(pts(&[(0., 0.), (0., 0.), (0., 0.)])).is_err());
    }

    #[test]
    fn bow_tie_is_rejected() {
        let err = SimplePolygon::new(pts(&[(0., 0.), (2., 2.), (2., 0.), (0., 1.)])).unwrap_err();
        assert!(err.to_string().contains("self-intersects"));
    }

    #[test]
    fn non_finite_or_far_coordinates_are_rejected() {
        assert!(SimplePolygon::new(pts(&[(0., 0.), (f64::NAN, 0.), (0., 1.)])).is_err());
        assert!(SimplePolygon::new(pts(&[(0., 0.), (2e7, 0.), (0., 1.)])).is_err());
    }

    #[test]
    fn containment_and_centroid() {
        let sq = SimplePolygon::rectangle(PlanarPoint::new(0., 0.), PlanarPoint::new(2., 2.)).unwrap();
        assert!(sq.contains(PlanarPoint::new(1., 1.)));
        assert!(!sq.contains(PlanarPoint::new(3., 1.)));
        assert!(sq.contains_or_touches(PlanarPoint::new(2., 1.), 1e-9));
        let c = sq.centroid();
        assert!((c.x - 1.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concave_polygon_is_accepted() {
        let l = SimplePolygon::new(pts(&[(0., 0.), (2., 0.), (2., 1.), (1., 1.), (1., 2.), (0., 2.)])).unwrap();
        assert_eq!(l.area(), 3.0);
        assert!(!l.is_convex());
        assert!(!l.contains(PlanarPoint::new(1.5, 1.5)));
    }
}
