//! Splitting a site's cell into per-antenna coverage wedges.
//!
//! Wedge boundaries sit on the angular bisectors between neighbouring
//! azimuths. A convex cell is star-shaped from its site, so each wedge is
//! built exactly: the site, the boundary hit of the first bounding ray,
//! every cell vertex strictly inside the angular range, and the boundary hit
//! of the second ray.

use serde::{Deserialize, Serialize};

use super::polygon::{PlanarPoint, SimplePolygon};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub site: PlanarPoint,
    azimuths: Vec<f64>,
}

impl SectorSpec {
    /// Azimuths are degrees clockwise from north; they are normalized to
    /// [0, 360) and sorted. Duplicates are rejected.
    pub fn new(site: PlanarPoint, azimuths: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut az: Vec<f64> = Vec::new();
        for a in azimuths {
            if !a.is_finite() {
                return Err(Error::invalid(format!("azimuth {a} is not finite")));
            }
            az.push(normalize_deg(a));
        }
        if az.is_empty() {
            return Err(Error::invalid("a sector spec needs at least one azimuth"));
        }
        az.sort_by(f64::total_cmp);
        for w in az.windows(2) {
            if (w[1] - w[0]).abs() < 1e-9 {
                return Err(Error::invalid(format!("duplicate azimuth {}", w[0])));
            }
        }
        if az.len() > 1 && (az[0] + 360.0 - az[az.len() - 1]).abs() < 1e-9 {
            return Err(Error::invalid(format!("duplicate azimuth {}", az[0])));
        }
        Ok(SectorSpec { site, azimuths: az })
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths
    }

    /// Clockwise angular range `[start, end)` (in azimuth degrees, `end`
    /// possibly above 360) covered by each azimuth.
    pub fn boundaries(&self) -> Vec<(f64, f64)> {
        let az = &self.azimuths;
        let n = az.len();
        if n == 1 {
            return vec![(0.0, 360.0)];
        }
        (0..n)
            .map(|i| {
                let prev = if i == 0 { az[n - 1] - 360.0 } else { az[i - 1] };
                let next = if i == n - 1 { az[0] + 360.0 } else { az[i + 1] };
                (0.5 * (prev + az[i]), 0.5 * (az[i] + next))
            })
            .collect()
    }
}

fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// One wedge per azimuth (in the spec's sorted order); a single azimuth
/// returns the cell unchanged. The cell must be convex and contain the site
/// in its interior.
pub fn sector_split(cell: &SimplePolygon, spec: &SectorSpec) -> Result<Vec<(f64, SimplePolygon)>> {
    let az = spec.azimuths();
    if az.len() == 1 {
        if !cell.contains(spec.site) {
            return Err(Error::geometry("sector site lies outside its cell"));
        }
        return Ok(vec![(az[0], cell.clone())]);
    }
    if !cell.is_convex() {
        return Err(Error::geometry("sector splitting needs a convex cell"));
    }
    let s = spec.site;
    let scale = cell.bounds().width().max(cell.bounds().height());
    let interior = cell.contains(s)
        && cell
            .edges()
            .all(|(a, b)| super::polygon::point_segment_distance(s, a, b) > 1e-9 * scale);
    if !interior {
        return Err(Error::geometry("sector site must lie strictly inside its cell"));
    }

    let verts: Vec<(f64, PlanarPoint)> = cell
        .vertices()
        .iter()
        .map(|v| (azimuth_of(s, *v), *v))
        .collect();

    spec.boundaries()
        .into_iter()
        .zip(az.iter())
        .map(|((start, end), &a)| {
            let mut ring = vec![s, ray_hit(cell, s, start)];
            let span = end - start;
            // Clockwise in azimuth is clockwise on the map, so collect vertices
            // clockwise and reverse at the end (the constructor reorients anyway).
            let mut inside: Vec<(f64, PlanarPoint)> = verts
                .iter()
                .filter_map(|&(va, v)| {
                    let rel = (va - start).rem_euclid(360.0);
                    (rel > 1e-12 && rel < span - 1e-12).then_some((rel, v))
                })
                .collect();
            inside.sort_by(|x, y| x.0.total_cmp(&y.0));
            ring.extend(inside.into_iter().map(|(_, v)| v));
            ring.push(ray_hit(cell, s, end));
            ring.reverse();
            SimplePolygon::new_unchecked_simple(ring).map(|p| (a, p))
        })
        .collect()
}

/// Azimuth (degrees clockwise from north) of `p` seen from `from`.
fn azimuth_of(from: PlanarPoint, p: PlanarPoint) -> f64 {
    normalize_deg((p.x - from.x).atan2(p.y - from.y).to_degrees())
}

/// First boundary point of a convex polygon hit by the ray from interior
/// point `s` toward azimuth `az`.
fn ray_hit(cell: &SimplePolygon, s: PlanarPoint, az: f64) -> PlanarPoint {
    let r = az.to_radians();
    let (dx, dy) = (r.sin(), r.cos());
    let mut best = f64::INFINITY;
    for (a, b) in cell.edges() {
        let (ex, ey) = (b.x - a.x, b.y - a.y);
        let denom = dx * ey - dy * ex;
        if denom.abs() < 1e-300 {
            continue;
        }
        let (wx, wy) = (a.x - s.x, a.y - s.y);
        let t = (wx * ey - wy * ex) / denom;
        let u = (wx * dy - wy * dx) / denom;
        if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) && t < best {
            best = t;
        }
    }
    PlanarPoint::new(s.x + best * dx, s.y + best * dy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(n: usize, r: f64) -> SimplePolygon {
        SimplePolygon::new(
            (0..n)
                .map(|i| {
                    let t = i as f64 * std::f64::consts::TAU / n as f64;
                    PlanarPoint::new(r * t.cos(), r * t.sin())
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn azimuths_are_normalized_and_sorted() {
        let s = SectorSpec::new(PlanarPoint::new(0., 0.), [240.0, -240.0, 0.0]).unwrap();
        assert_eq!(s.azimuths(), &[0.0, 120.0, 240.0]);
        assert!(SectorSpec::new(PlanarPoint::new(0., 0.), [10.0, 370.0]).is_err());
        assert!(SectorSpec::new(PlanarPoint::new(0., 0.), []).is_err());
    }

    #[test]
    fn three_sectors_of_a_disk_are_equal() {
        let cell = disk(360, 100.0);
        let spec = SectorSpec::new(PlanarPoint::new(0., 0.), [0.0, 120.0, 240.0]).unwrap();
        assert_eq!(spec.boundaries(), vec![(-60.0, 60.0), (60.0, 180.0), (180.0, 300.0)]);
        let wedges = sector_split(&cell, &spec).unwrap();
        let total: f64 = wedges.iter().map(|w| w.1.area()).sum();
        assert!((total - cell.area()).abs() < 1e-9 * cell.area());
        for (_, w) in &wedges {
            assert!((w.area() - cell.area() / 3.0).abs() < 1e-9 * cell.area());
        }
        // the north-facing wedge holds a point due north and not one due south
        assert!(wedges[0].1.contains(PlanarPoint::new(0.0, 50.0)));
        assert!(!wedges[0].1.contains(PlanarPoint::new(0.0, -50.0)));
    }

    #[test]
    fn single_azimuth_is_identity() {
        let cell = disk(12, 5.0);
        let spec = SectorSpec::new(PlanarPoint::new(0.5, 0.5), [0.0]).unwrap();
        let w = sector_split(&cell, &spec).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].1, cell);
    }

    #[test]
    fn two_sectors_of_a_square_split_on_the_diagonal() {
        let cell = SimplePolygon::rectangle(PlanarPoint::new(-1., -1.), PlanarPoint::new(1., 1.)).unwrap();
        let spec = SectorSpec::new(PlanarPoint::new(0., 0.), [0.0, 90.0]).unwrap();
        let w = sector_split(&cell, &spec).unwrap();
        // boundaries at 45 and 225 degrees: the square is cut along the NE-SW diagonal
        assert!((w[0].1.area() - 2.0).abs() < 1e-12);
        assert!((w[1].1.area() - 2.0).abs() < 1e-12);
        assert!(w[0].1.contains(PlanarPoint::new(-0.5, 0.5)));
        assert!(w[1].1.contains(PlanarPoint::new(0.5, -0.5)));
    }

    #[test]
    fn bisector_wedges_never_exceed_half_a_turn() {
        let cell = disk(64, 10.0);
        let spec = SectorSpec::new(PlanarPoint::new(1.0, -2.0), [0.0, 30.0, 45.0]).unwrap();
        for (start, end) in spec.boundaries() {
            assert!(end - start <= 180.0);
        }
        let w = sector_split(&cell, &spec).unwrap();
        let total: f64 = w.iter().map(|x| x.1.area()).sum();
        assert!((total - cell.area()).abs() < 1e-9 * cell.area());
        assert!(w.iter().all(|x| x.1.is_convex()));
    }

    #[test]
    fn site_outside_cell_is_an_error() {
        let cell = disk(12, 1.0);
        let spec = SectorSpec::new(PlanarPoint::new(5.0, 0.0), [0.0, 180.0]).unwrap();
        assert!(sector_split(&cell, &spec).is_err());
    }
}
