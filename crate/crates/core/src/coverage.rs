//! Zone selection by coverage quality.
//!
//! For a zone `p` and an antenna polygon `v`:
//!
//! * illumination ratio `I_pv = area(v ∩ p) / area(v)`
//! * step 1 keeps antennas with `I_pv >= alpha`
//! * coverage precision `CP_p = Σ I_pv` over the kept antennas
//! * zone illumination `I_p = Σ area(v ∩ p) / area(p)`; step 2 needs `I_p > beta`
//! * coverage quality `Q_p = 2 CP_p I_p / (CP_p + I_p)`; step 3 needs `Q_p >= gamma`

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ConvexParts, SimplePolygon};
use crate::model::{antenna_polygons, site_polygons, AntennaPolygon, AntennaSite, ZonePolygon};
use crate::stats::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionThresholds {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        SelectionThresholds {
            alpha: 0.1,
            beta: 0.8,
            gamma: 0.4,
        }
    }
}

impl SelectionThresholds {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let t = SelectionThresholds { alpha, beta, gamma };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("threshold {name} = {v} must lie in (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Stage at which a zone left the selection, or `Selected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoAntenna,
    LowIllumination,
    LowQuality,
    Selected,
}

impl Verdict {
    pub const ALL: [Verdict; 4] = [
        Verdict::NoAntenna,
        Verdict::LowIllumination,
        Verdict::LowQuality,
        Verdict::Selected,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::NoAntenna => "no-antenna",
            Verdict::LowIllumination => "low-illumination",
            Verdict::LowQuality => "low-quality",
            Verdict::Selected => "selected",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Verdict::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown verdict {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedAntenna {
    pub antenna_id: String,
    /// `I_pv`
    pub ratio: f64,
    /// `area(v ∩ p)` in square meters.
    pub overlap_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub zone_id: String,
    pub zone_area: f64,
    /// `V_sel,p` in antenna-id order.
    pub selected: Vec<SelectedAntenna>,
    /// `CP_p`, `I_p`, `Q_p`; `None` when no antenna was selected.
    pub precision: Option<f64>,
    pub illumination: Option<f64>,
    pub quality: Option<f64>,
    pub verdict: Verdict,
}

impl CoverageReport {
    pub fn is_selected(&self) -> bool {
        self.verdict == Verdict::Selected
    }
}

/// `I_pv` for one antenna polygon and one zone.
pub fn illumination_ratio(antenna: &SimplePolygon, zone: &SimplePolygon) -> Result<f64> {
    let a = ConvexParts::new(antenna);
    let z = ConvexParts::new(zone);
    ratio_of(&a, &z)
}

fn ratio_of(antenna: &ConvexParts, zone: &ConvexParts) -> Result<f64> {
    if !(antenna.area() > 0.0) {
        return Err(Error::geometry("antenna polygon has zero area"));
    }
    Ok((antenna.intersection_area(zone) / antenna.area()).clamp(0.0, 1.0))
}

/// `CP_p = Σ I_pv`; not clamped, it may exceed 1.
pub fn coverage_precision(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::undefined("coverage precision of an empty antenna set"));
    }
    Ok(ratios.iter().sum())
}

/// `I_p`: share of the zone covered by the selected antenna polygons.
pub fn zone_illumination(zone: &SimplePolygon, selected: &[&SimplePolygon]) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::undefined("zone illumination of an empty antenna set"));
    }
    let z = ConvexParts::new(zone);
    let covered: f64 = selected.iter().map(|a| ConvexParts::new(a).intersection_area(&z)).sum();
    Ok(covered / zone.area())
}

/// Harmonic mean of `CP_p` and `I_p`.
pub fn coverage_quality(precision: f64, illumination: f64) -> Result<f64> {
    if precision < 0.0 || illumination < 0.0 || !precision.is_finite() || !illumination.is_finite() {
        return Err(Error::invalid(format!(
            "coverage quality needs finite non-negative inputs (got {precision}, {illumination})"
        )));
    }
    let s = precision + illumination;
    if s == 0.0 {
        return Err(Error::undefined("coverage quality with CP_p + I_p = 0"));
    }
    Ok(2.0 * precision * illumination / s)
}

/// Steps 2 and 3 for a zone with a non-empty antenna set.
pub fn classify(illumination: f64, quality: f64, t: &SelectionThresholds) -> Verdict {
    if !(illumination > t.beta) {
        Verdict::LowIllumination
    } else if quality >= t.gamma {
        Verdict::Selected
    } else {
        Verdict::LowQuality
    }
}

struct PreparedAntenna<'a> {
    id: &'a str,
    parts: ConvexParts,
}

fn prepare(antennas: &[AntennaPolygon]) -> Vec<PreparedAntenna<'_>> {
    let mut v: Vec<PreparedAntenna> = antennas
        .par_iter()
        .map(|a| PreparedAntenna {
            id: &a.antenna_id,
            parts: ConvexParts::new(&a.polygon),
        })
        .collect();
    v.sort_by(|a, b| a.id.cmp(b.id));
    v
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::invalid(format!("duplicate {what} id {id:?}")));
        }
    }
    Ok(())
}

fn step_one(zone: &ConvexParts, antennas: &[PreparedAntenna<'_>], alpha: f64) -> Result<Vec<SelectedAntenna>> {
    let mut out = Vec::new();
    for a in antennas {
        if !a.parts.bounds().intersects(&zone.bounds()) {
            continue;
        }
        let overlap = a.parts.intersection_area(zone);
        if overlap <= 0.0 {
            continue;
        }
        let ratio = ratio_of(&a.parts, zone)?;
        if ratio >= alpha {
            out.push(SelectedAntenna {
                antenna_id: a.id.to_string(),
                ratio,
                overlap_area: overlap,
            });
        }
    }
    Ok(out)
}

/// Step 1 only: `V_sel,p` for every zone, keyed by zone id.
pub fn select_antennas(
    zones: &[ZonePolygon],
    antennas: &[AntennaPolygon],
    alpha: f64,
) -> Result<BTreeMap<String, Vec<SelectedAntenna>>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    let prepared = prepare(antennas);
    zones
        .par_iter()
        .map(|z| Ok((z.zone_id.clone(), step_one(&ConvexParts::new(&z.polygon), &prepared, alpha)?)))
        .collect()
}

/// Full three-step selection. Reports are sorted by zone id.
pub fn run_selection(
    zones: &[ZonePolygon],
    antennas: &[AntennaPolygon],
    thresholds: &SelectionThresholds,
) -> Result<Vec<CoverageReport>> {
    thresholds.validate()?;
    check_unique(zones.iter().map(|z| z.zone_id.as_str()), "zone")?;
    check_unique(antennas.iter().map(|a| a.antenna_id.as_str()), "antenna")?;
    let prepared = prepare(antennas);
    let mut reports: Vec<CoverageReport> = zones
        .par_iter()
        .map(|z| evaluate_zone(z, &prepared, thresholds))
        .collect::<Result<_>>()?;
    reports.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
    Ok(reports)
}

fn evaluate_zone(zone: &ZonePolygon, antennas: &[PreparedAntenna<'_>], t: &SelectionThresholds) -> Result<CoverageReport> {
    let parts = ConvexParts::new(&zone.polygon);
    let selected = step_one(&parts, antennas, t.alpha)?;
    let zone_area = zone.polygon.area();
    if selected.is_empty() {
        return Ok(CoverageReport {
            zone_id: zone.zone_id.clone(),
            zone_area,
            selected,
            precision: None,
            illumination: None,
            quality: None,
            verdict: Verdict::NoAntenna,
        });
    }
    let ratios: Vec<f64> = selected.iter().map(|s| s.ratio).collect();
    let cp = coverage_precision(&ratios)?;
    let ip = selected.iter().map(|s| s.overlap_area).sum::<f64>() / zone_area;
    let q = coverage_quality(cp, ip)?;
    Ok(CoverageReport {
        zone_id: zone.zone_id.clone(),
        zone_area,
        verdict: classify(ip, q, t),
        selected,
        precision: Some(cp),
        illumination: Some(ip),
        quality: Some(q),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributionMethod {
    BaseStation,
    Antenna,
}

impl AttributionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttributionMethod::BaseStation => "base-station",
            AttributionMethod::Antenna => "antenna",
        }
    }
}

/// Medians over the zones a method selects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributionSummary {
    pub method: AttributionMethod,
    pub median_precision: Option<f64>,
    pub median_illumination: Option<f64>,
    pub median_quality: Option<f64>,
    pub selected: Vec<String>,
    pub reports: Vec<CoverageReport>,
}

impl AttributionSummary {
    fn from_reports(method: AttributionMethod, reports: Vec<CoverageReport>) -> Self {
        let sel: Vec<&CoverageReport> = reports.iter().filter(|r| r.is_selected()).collect();
        let col = |f: fn(&CoverageReport) -> Option<f64>| median(&sel.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
        AttributionSummary {
            method,
            median_precision: col(|r| r.precision),
            median_illumination: col(|r| r.illumination),
            median_quality: col(|r| r.quality),
            selected: sel.iter().map(|r| r.zone_id.clone()).collect(),
            reports,
        }
    }

    pub fn n_selected(&self) -> usize {
        self.selected.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributionComparison {
    pub base_station: AttributionSummary,
    pub antenna: AttributionSummary,
}

impl AttributionComparison {
    /// Relative gain of the antenna method's median `Q_p` over the
    /// base-station one.
    pub fn quality_gain(&self) -> Option<f64> {
        match (self.antenna.median_quality, self.base_station.median_quality) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b - 1.0),
            _ => None,
        }
    }
}

/// Runs the selection on whole-site Voronoi cells and on sector-split cells.
pub fn compare_attribution(
    zones: &[ZonePolygon],
    sites: &[AntennaSite],
    bbox: &SimplePolygon,
    thresholds: &SelectionThresholds,
) -> Result<AttributionComparison> {
    let cells = site_polygons(sites, bbox)?;
    let wedges = antenna_polygons(sites, bbox)?;
    Ok(AttributionComparison {
        base_station: AttributionSummary::from_reports(
            AttributionMethod::BaseStation,
            run_selection(zones, &cells, thresholds)?,
        ),
        antenna: AttributionSummary::from_reports(AttributionMethod::Antenna, run_selection(zones, &wedges, thresholds)?),
    })
}
