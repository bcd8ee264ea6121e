//! Domain objects shared across the pipeline stages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{sector_split, voronoi_cells, PlanarPoint, SectorSpec, SimplePolygon};

/// One antenna of a base station, identified by the azimuth it faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaSector {
    pub antenna_id: String,
    /// Degrees clockwise from north.
    pub azimuth: f64,
}

/// A base station: a position and the antennas mounted on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaSite {
    pub site_id: String,
    pub position: PlanarPoint,
    pub sectors: Vec<AntennaSector>,
}

impl AntennaSite {
    pub fn sector_spec(&self) -> Result<SectorSpec> {
        SectorSpec::new(self.position, self.sectors.iter().map(|s| s.azimuth))
    }
}

/// A small urban zone (a park) to which traffic is attributed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZonePolygon {
    pub zone_id: String,
    pub name: String,
    pub polygon: SimplePolygon,
}

/// The coverage polygon attributed to one traffic source (an antenna, or a
/// whole site when working at base-station granularity).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntennaPolygon {
    pub antenna_id: String,
    pub polygon: SimplePolygon,
}

/// Voronoi cell of every site, one polygon per site keyed by site id.
pub fn site_polygons(sites: &[AntennaSite], bbox: &SimplePolygon) -> Result<Vec<AntennaPolygon>> {
    let positions: Vec<PlanarPoint> = sites.iter().map(|s| s.position).collect();
    let cells = voronoi_cells(&positions, bbox)?;
    Ok(sites
        .iter()
        .zip(cells)
        .map(|(s, polygon)| AntennaPolygon {
            antenna_id: s.site_id.clone(),
            polygon,
        })
        .collect())
}

/// Sector-split Voronoi cells, one polygon per antenna.
pub fn antenna_polygons(sites: &[AntennaSite], bbox: &SimplePolygon) -> Result<Vec<AntennaPolygon>> {
    let positions: Vec<PlanarPoint> = sites.iter().map(|s| s.position).collect();
    let cells = voronoi_cells(&positions, bbox)?;
    let mut out = Vec::new();
    for (site, cell) in sites.iter().zip(&cells) {
        let spec = site.sector_spec()?;
        let wedges = sector_split(cell, &spec)?;
        for (az, polygon) in wedges {
            let sector = site
                .sectors
                .iter()
                .find(|s| (s.azimuth.rem_euclid(360.0) - az).abs() < 1e-9)
                .ok_or_else(|| Error::geometry(format!("site {}: lost azimuth {az}", site.site_id)))?;
            out.push(AntennaPolygon {
                antenna_id: sector.antenna_id.clone(),
                polygon,
            });
        }
    }
    Ok(out)
}
