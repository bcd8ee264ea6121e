use rayon::prelude::*;

use super::orient;
use super::polygon::{cleanup_ring, PlanarPoint, SimplePolygon};
use crate::error::{Error, Result};

/// Bounded Voronoi tessellation: each cell is `bbox` clipped by the
/// bisector half-planes toward every other site. `bbox` must be convex.
///
/// Cells are returned in site order.
pub fn voronoi_cells(sites: &[PlanarPoint], bbox: &SimplePolygon) -> Result<Vec<SimplePolygon>> {
    if sites.is_empty() {
        return Err(Error::invalid("voronoi_cells needs at least one site"));
    }
    if !bbox.is_convex() {
        return Err(Error::geometry("study bounding polygon must be convex"));
    }
    let scale = bbox.bounds().width().max(bbox.bounds().height());
    for (i, s) in sites.iter().enumerate() {
        if !bbox.contains_or_touches(*s, 1e-9 * scale) {
            return Err(Error::invalid(format!("site {i} at ({}, {}) lies outside the study area", s.x, s.y)));
        }
    }
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| sites[a].x.total_cmp(&sites[b].x).then(sites[a].y.total_cmp(&sites[b].y)));
    for w in order.windows(2) {
        if sites[w[0]] == sites[w[1]] {
            return Err(Error::invalid(format!("duplicate sites {} and {}", w[0], w[1])));
        }
    }

    (0..sites.len()).into_par_iter().map(|i| cell_for(i, sites, bbox)).collect()
}

fn cell_for(i: usize, sites: &[PlanarPoint], bbox: &SimplePolygon) -> Result<SimplePolygon> {
    let s = sites[i];
    let mut others: Vec<(f64, usize)> = sites
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| (s.distance_sq(p), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut ring = bbox.vertices().to_vec();
    for (d2, j) in others {
        // A site more than twice the cell radius away cannot cut the cell.
        let radius2 = ring.iter().map(|v| s.distance_sq(v)).fold(0.0, f64::max);
        if d2 > 4.0 * radius2 {
            break;
        }
        ring = clip_halfplane(&ring, s, sites[j]);
        if ring.len() < 3 {
            return Err(Error::geometry(format!("Voronoi cell of site {i} collapsed")));
        }
    }
    SimplePolygon::new_unchecked_simple(ring)
}

/// Keeps the part of a convex ring closer to `own` than to `other`.
fn clip_halfplane(ring: &[PlanarPoint], own: PlanarPoint, other: PlanarPoint) -> Vec<PlanarPoint> {
    let mid = PlanarPoint::new(0.5 * (own.x + other.x), 0.5 * (own.y + other.y));
    // Line through `mid` perpendicular to own->other, directed so `own` is on the left.
    let dir = PlanarPoint::new(-(other.y - own.y), other.x - own.x);
    let a = mid;
    let b = PlanarPoint::new(mid.x + dir.x, mid.y + dir.y);
    let m = ring.len();
    let mut out = Vec::with_capacity(m + 1);
    for k in 0..m {
        let cur = ring[k];
        let prev = ring[(k + m - 1) % m];
        let dc = orient(a, b, cur);
        let dp = orient(a, b, prev);
        if dc >= 0.0 {
            if dp < 0.0 {
                out.push(lerp(prev, cur, dp / (dp - dc)));
            }
            out.push(cur);
        } else if dp >= 0.0 {
            out.push(lerp(prev, cur, dp / (dp - dc)));
        }
    }
    cleanup_ring(&mut out);
    out
}

#[inline]
fn lerp(p: PlanarPoint, q: PlanarPoint, t: f64) -> PlanarPoint {
    PlanarPoint::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bbox() -> SimplePolygon {
        SimplePolygon::rectangle(PlanarPoint::new(0., 0.), PlanarPoint::new(10., 10.)).unwrap()
    }

    #[test]
    fn single_site_cell_is_bbox() {
        let cells = voronoi_cells(&[PlanarPoint::new(3., 4.)], &bbox()).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].area(), 100.0);
    }

    #[test]
    fn symmetric_pair_splits_in_half() {
        let cells = voronoi_cells(&[PlanarPoint::new(2., 5.), PlanarPoint::new(8., 5.)], &bbox()).unwrap();
        assert!((cells[0].area() - 50.0).abs() < 1e-9);
        assert!((cells[1].area() - 50.0).abs() < 1e-9);
        assert!(cells[0].vertices().iter().all(|v| v.x <= 5.0 + 1e-12));
    }

    #[test]
    fn duplicate_sites_are_rejected() {
        let s = PlanarPoint::new(2., 2.);
        assert!(voronoi_cells(&[s, PlanarPoint::new(5., 5.), s], &bbox()).is_err());
    }

    #[test]
    fn site_outside_bbox_is_rejected() {
        assert!(voronoi_cells(&[PlanarPoint::new(20., 2.)], &bbox()).is_err());
    }

    #[test]
    fn grid_sites_tile_the_box() {
        let sites: Vec<PlanarPoint> = (0..5)
            .flat_map(|i| (0..5).map(move |j| PlanarPoint::new(1.0 + 2.0 * i as f64, 1.0 + 2.0 * j as f64)))
            .collect();
        let cells = voronoi_cells(&sites, &bbox()).unwrap();
        for c in &cells {
            assert!((c.area() - 4.0).abs() < 1e-9);
        }
    }
}
