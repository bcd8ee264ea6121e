//! Polygon intersection through convex decomposition.
//!
//! Each operand is split into interior-disjoint convex parts (itself when
//! already convex, an ear-clipping triangulation otherwise) and every pair
//! of overlapping parts is intersected with Sutherland-Hodgman. The pieces
//! are interior-disjoint because the parts are, so their areas add up.

use super::polygon::{cleanup_ring, signed_area, Aabb, PlanarPoint, SimplePolygon};
use super::orient;
use crate::error::Result;

/// Convex decomposition of a polygon, reusable across many intersections.
#[derive(Debug, Clone)]
pub struct ConvexParts {
    parts: Vec<Vec<PlanarPoint>>,
    boxes: Vec<Aabb>,
    bounds: Aabb,
    area: f64,
}

impl ConvexParts {
    pub fn new(poly: &SimplePolygon) -> Self {
        let parts = if poly.is_convex() {
            vec![poly.vertices().to_vec()]
        } else {
            triangulate(poly.vertices())
        };
        let boxes = parts.iter().map(|p| Aabb::of(p)).collect();
        ConvexParts {
            parts,
            boxes,
            bounds: poly.bounds(),
            area: poly.area(),
        }
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    fn piece_rings(&self, other: &ConvexParts) -> Vec<Vec<PlanarPoint>> {
        let mut out = Vec::new();
        if !self.bounds.intersects(&other.bounds) {
            return out;
        }
        for (pa, ba) in self.parts.iter().zip(&self.boxes) {
            if !ba.intersects(&other.bounds) {
                continue;
            }
            for (pb, bb) in other.parts.iter().zip(&other.boxes) {
                if !ba.intersects(bb) {
                    continue;
                }
                let ring = clip_convex(pa, pb);
                if ring.len() >= 3 {
                    out.push(ring);
                }
            }
        }
        out
    }

    /// Area of the intersection with `other`, summed in a fixed part order.
    pub fn intersection_area(&self, other: &ConvexParts) -> f64 {
        self.piece_rings(other).iter().map(|r| signed_area(r).max(0.0)).sum()
    }

    pub fn intersection(&self, other: &ConvexParts) -> Vec<SimplePolygon> {
        self.piece_rings(other)
            .into_iter()
            .filter_map(|ring| SimplePolygon::new_unchecked_simple(ring).ok())
            .collect()
    }
}

/// Intersection of two simple polygons as interior-disjoint convex pieces.
/// Empty when the polygons do not overlap (touching boundaries included).
pub fn polygon_intersection(a: &SimplePolygon, b: &SimplePolygon) -> Result<Vec<SimplePolygon>> {
    Ok(ConvexParts::new(a).intersection(&ConvexParts::new(b)))
}

/// Clips convex CCW `subject` against convex CCW `clip`.
fn clip_convex(subject: &[PlanarPoint], clip: &[PlanarPoint]) -> Vec<PlanarPoint> {
    let mut output = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let input = std::mem::take(&mut output);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let dc = orient(a, b, cur);
            let dp = orient(a, b, prev);
            if dc >= 0.0 {
                if dp < 0.0 {
                    output.push(crossing(prev, cur, dp, dc));
                }
                output.push(cur);
            } else if dp >= 0.0 {
                output.push(crossing(prev, cur, dp, dc));
            }
        }
    }
    cleanup_ring(&mut output);
    if output.len() < 3 {
        return Vec::new();
    }
    let area = signed_area(&output);
    let bb = Aabb::of(&output);
    let scale = bb.width().max(bb.height());
    if area <= 1e-12 * scale * scale {
        return Vec::new();
    }
    output
}

#[inline]
fn crossing(p: PlanarPoint, q: PlanarPoint, dp: f64, dq: f64) -> PlanarPoint {
    let t = dp / (dp - dq);
    PlanarPoint::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// Ear-clipping triangulation of a CCW simple ring.
fn triangulate(v: &[PlanarPoint]) -> Vec<Vec<PlanarPoint>> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut tris = Vec::with_capacity(v.len().saturating_sub(2));
    while idx.len() > 3 {
        let m = idx.len();
        let mut ear = None;
        for k in 0..m {
            let (ip, ic, inx) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (v[ip], v[ic], v[inx]);
            if orient(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&o| {
                if o == ip || o == ic || o == inx {
                    return false;
                }
                let p = v[o];
                if p == a || p == b || p == c {
                    return false;
                }
                orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
            });
            if !blocked {
                ear = Some(k);
                break;
            }
        }
        // Numerical dead end: cut the most convex vertex so progress is guaranteed.
        let k = ear.unwrap_or_else(|| {
            (0..m)
                .max_by(|&x, &y| {
                    let ox = orient(v[idx[(x + m - 1) % m]], v[idx[x]], v[idx[(x + 1) % m]]);
                    let oy = orient(v[idx[(y + m - 1) % m]], v[idx[y]], v[idx[(y + 1) % m]]);
                    ox.total_cmp(&oy)
                })
                .unwrap_or(0)
        });
        let (ip, ic, inx) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
        if orient(v[ip], v[ic], v[inx]) > 0.0 {
            tris.push(vec![v[ip], v[ic], v[inx]]);
        }
        idx.remove(k);
    }
    if idx.len() == 3 && orient(v[idx[0]], v[idx[1]], v[idx[2]]) > 0.0 {
        tris.push(vec![v[idx[0]], v[idx[1]], v[idx[2]]]);
    }
    tris
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[(f64, f64)]) -> SimplePolygon {
        SimplePolygon::new(c.iter().copied().map(PlanarPoint::from).collect()).unwrap()
    }

    fn total(p: &[SimplePolygon]) -> f64 {
        p.iter().map(|x| x.area()).sum()
    }

    fn unit_square() -> SimplePolygon {
        poly(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])
    }

    #[test]
    fn self_intersection_is_idempotent() {
        let a = unit_square();
        assert!((total(&polygon_intersection(&a, &a).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_squares_give_nothing() {
        let a = unit_square();
        let b = a.translated(3.0, 0.0).unwrap();
        assert!(polygon_intersection(&a, &b).unwrap().is_empty());
    }

    #[test]
    fn edge_touching_squares_give_nothing() {
        let a = unit_square();
        let b = a.translated(1.0, 0.0).unwrap();
        assert!(polygon_intersection(&a, &b).unwrap().is_empty());
    }

    #[test]
    fn half_shifted_square_overlaps_half() {
        let a = unit_square();
        let b = a.translated(0.5, 0.0).unwrap();
        assert!((total(&polygon_intersection(&a, &b).unwrap()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn concave_operands() {
        // L-shape (area 3) against a square covering its notch and one arm.
        let l = poly(&[(0., 0.), (2., 0.), (2., 1.), (1., 1.), (1., 2.), (0., 2.)]);
        let sq = poly(&[(0.5, 0.5), (2.5, 0.5), (2.5, 2.5), (0.5, 2.5)]);
        // overlap = [0.5,2]x[0.5,1] + [0.5,1]x[1,2] = 0.75 + 0.5
        let pieces = polygon_intersection(&l, &sq).unwrap();
        assert!((total(&pieces) - 1.25).abs() < 1e-12);
        let rev = polygon_intersection(&sq, &l).unwrap();
        assert!((total(&rev) - 1.25).abs() < 1e-12);
        assert!((total(&polygon_intersection(&l, &l).unwrap()) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn triangulation_covers_area() {
        let star: Vec<PlanarPoint> = (0..10)
            .map(|i| {
                let r = if i % 2 == 0 { 2.0 } else { 0.8 };
                let t = i as f64 * std::f64::consts::PI / 5.0;
                PlanarPoint::new(r * t.cos(), r * t.sin())
            })
            .collect();
        let p = SimplePolygon::new(star).unwrap();
        let tris = triangulate(p.vertices());
        assert_eq!(tris.len(), 8);
        let sum: f64 = tris.iter().map(|t| signed_area(t)).sum();
        assert!((sum - p.area()).abs() < 1e-12);
    }
}
