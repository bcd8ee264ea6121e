//! Planar geometry kernel.
//!
//! Everything downstream works in a local metric plane: longitudes and
//! latitudes are projected about a study-area origin, and all areas are in
//! square meters.

mod clip;
mod polygon;
mod projection;
mod sector;
mod voronoi;

pub use clip::{polygon_intersection, ConvexParts};
pub use polygon::{Aabb, PlanarPoint, SimplePolygon, MAX_COORD};
pub use projection::{project, unproject, GeoPoint, EARTH_RADIUS_M};
pub use sector::{sector_split, SectorSpec};
pub use voronoi::voronoi_cells;

/// Shoelace area of a validated polygon.
pub fn polygon_area(p: &SimplePolygon) -> f64 {
    p.area()
}

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
#[inline]
pub(crate) fn orient(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}
