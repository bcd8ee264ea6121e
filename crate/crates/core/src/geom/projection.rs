use serde::{Deserialize, Serialize};

use super::polygon::{PlanarPoint, MAX_COORD};
use crate::error::{Error, Result};

/// Mean Earth radius (IUGG), meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

const MAX_ABS_LAT: f64 = 85.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
}

impl GeoPoint {
    pub const fn new(lon: f64, lat: f64) -> Self {
        GeoPoint { lon, lat }
    }

    fn check(&self) -> Result<()> {
        if !(self.lon.is_finite() && self.lat.is_finite()) || self.lon.abs() > 180.0 || self.lat.abs() >= MAX_ABS_LAT {
            return Err(Error::invalid(format!(
                "coordinate (lon {}, lat {}) outside the supported range (|lon| <= 180, |lat| < 85)",
                self.lon, self.lat
            )));
        }
        Ok(())
    }
}

/// Local equirectangular projection about `origin`.
pub fn project(lon: f64, lat: f64, origin: GeoPoint) -> Result<PlanarPoint> {
    let p = GeoPoint::new(lon, lat);
    p.check()?;
    origin.check()?;
    let x = EARTH_RADIUS_M * (lon - origin.lon).to_radians() * origin.lat.to_radians().cos();
    let y = EARTH_RADIUS_M * (lat - origin.lat).to_radians();
    if x.abs() >= MAX_COORD || y.abs() >= MAX_COORD {
        return Err(Error::invalid(format!("({lon}, {lat}) projects too far from the study origin")));
    }
    Ok(PlanarPoint::new(x, y))
}

/// Inverse of [`project`].
pub fn unproject(p: PlanarPoint, origin: GeoPoint) -> GeoPoint {
    let lon = origin.lon + (p.x / (EARTH_RADIUS_M * origin.lat.to_radians().cos())).to_degrees();
    let lat = origin.lat + (p.y / EARTH_RADIUS_M).to_degrees();
    GeoPoint::new(lon, lat)
}
