//! Deterministic synthetic scenarios with planted ground truth.
//!
//! Sites are dart-thrown with a minimum spacing, zones are rectangles
//! placed by rejection sampling until the selection procedure returns the
//! planted verdict with a safety margin around every threshold. Hourly
//! antenna traffic is the sum of a city background and the traffic of the
//! zones overlapping the antenna, shaped by a diurnal template, category
//! weights and a weekday multiplier, times mean-one lognormal noise.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Days, NaiveDate, Timelike};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::{DayWindow, LocalCalendar};
use crate::coverage::{run_selection, select_antennas, SelectionThresholds, Verdict};
use crate::error::{Error, Result};
use crate::geom::{project, unproject, GeoPoint, PlanarPoint, SimplePolygon};
use crate::ingest::{
    self, AppCatalog, AppCategory, Eligibility, EligibilityRecord, SocioRecord, TrafficRecord, TrafficWriter,
};
use crate::model::{antenna_polygons, AntennaPolygon, AntennaSector, AntennaSite, ZonePolygon};
use crate::rng::stream;
use crate::stats::median;
use crate::tags::TagTable;
use crate::traffic::{AppAxis, SeriesSet, TrafficSeries};

/// Relative hourly activity by local hour (mean 1 after normalization):
/// night trough, midday and evening peaks.
pub const DIURNAL: [f64; 24] = [
    0.35, 0.25, 0.18, 0.15, 0.15, 0.20, 0.35, 0.60, 0.85, 0.95, 1.05, 1.25, 1.45, 1.35, 1.15, 1.10, 1.20, 1.40, 1.60,
    1.70, 1.60, 1.35, 1.00, 0.65,
];

fn diurnal(hour: u32) -> f64 {
    let mean = DIURNAL.iter().sum::<f64>() / 24.0;
    DIURNAL[hour as usize] / mean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    pub name: String,
    /// Category name to weight; unlisted categories weigh `base_weight`.
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
    #[serde(default = "one")]
    pub base_weight: f64,
    pub wd_we_multiplier: f64,
    /// Bytes per square meter per hour at the mean diurnal level.
    pub density: f64,
}

fn one() -> f64 {
    1.0
}

impl Archetype {
    fn new(name: &str, weights: &[(&str, f64)], wd_we_multiplier: f64, density: f64) -> Self {
        Archetype {
            name: name.into(),
            weights: weights.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            base_weight: 1.0,
            wd_we_multiplier,
            density,
        }
    }

    /// The built-in archetypes: weekend leisure around sights, weekday
    /// lunch breaks, and family recreation.
    pub fn defaults() -> Vec<Archetype> {
        vec![
            Archetype::new("cultural", &[("Travel", 5.0), ("News", 3.0), ("Music", 2.0)], 0.8, 60.0),
            Archetype::new("lunchbreak", &[("Productivity", 5.0), ("Social", 3.0), ("Shopping", 2.0)], 1.8, 60.0),
            Archetype::new("recreational", &[("Games", 5.0), ("Fitness", 3.0), ("Video", 2.0)], 0.6, 60.0),
        ]
    }

    /// Normalized weights in category order.
    pub fn category_weights(&self) -> Result<[f64; 9]> {
        for (k, v) in &self.weights {
            k.parse::<AppCategory>()?;
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::invalid(format!("archetype {}: weight for {k} must be > 0", self.name)));
            }
        }
        if !(self.base_weight.is_finite() && self.base_weight > 0.0) {
            return Err(Error::invalid(format!("archetype {}: base_weight must be > 0", self.name)));
        }
        let mut w = [0.0; 9];
        for c in AppCategory::ALL {
            w[c.index()] = self
                .weights
                .iter()
                .find(|(k, _)| k.parse::<AppCategory>().ok() == Some(c))
                .map_or(self.base_weight, |(_, v)| *v);
        }
        let s: f64 = w.iter().sum();
        Ok(w.map(|x| x / s))
    }

    pub fn dominant_category(&self) -> Result<AppCategory> {
        let w = self.category_weights()?;
        let i = (0..9).fold(0, |b, i| if w[i] > w[b] { i } else { b });
        Ok(AppCategory::ALL[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZonePlan {
    pub selected: usize,
    #[serde(default)]
    pub no_antenna: usize,
    #[serde(default)]
    pub low_illumination: usize,
    #[serde(default)]
    pub low_quality: usize,
}

impl ZonePlan {
    pub fn total(&self) -> usize {
        self.selected + self.no_antenna + self.low_illumination + self.low_quality
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Center of the study area, also the projection origin.
    pub origin: [f64; 2],
    /// Width and height of the study area in meters.
    pub extent_m: [f64; 2],
    pub n_sites: usize,
    /// `(antennas, weight)` pairs; counts are apportioned exactly.
    pub antennas_per_site: Vec<(usize, f64)>,
    /// Minimum distance between sites; defaults to 0.7 of the mean spacing.
    pub min_site_spacing_m: Option<f64>,
    pub zones: ZonePlan,
    pub archetypes: Vec<Archetype>,
    pub start_date: NaiveDate,
    pub days: u32,
    pub noise_sigma: f64,
    /// City-wide bytes per square meter per hour.
    pub background_density: f64,
    pub background_wd_we_multiplier: f64,
    /// Spread of the per-zone traffic factor (uniform in 1 +- spread).
    pub zone_factor_spread: f64,
    pub thresholds: SelectionThresholds,
    /// Minimum distance of every planted coverage value from its threshold.
    pub margin: f64,
    /// Selected zones never share an antenna with another selected zone.
    pub exclusive_selected: bool,
    pub ineligible_antenna_days: usize,
    pub max_attempts_per_zone: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            origin: [2.3522, 48.8566],
            extent_m: [6000.0, 6000.0],
            n_sites: 40,
            antennas_per_site: vec![(2, 0.5), (3, 0.5)],
            min_site_spacing_m: None,
            zones: ZonePlan {
                selected: 32,
                no_antenna: 6,
                low_illumination: 6,
                low_quality: 6,
            },
            archetypes: Archetype::defaults(),
            start_date: NaiveDate::from_ymd_opt(2023, 3, 6).expect("valid date"),
            days: 28,
            noise_sigma: 0.3,
            background_density: 5.0,
            background_wd_we_multiplier: 1.2,
            zone_factor_spread: 0.3,
            thresholds: SelectionThresholds::default(),
            margin: 0.02,
            exclusive_selected: true,
            ineligible_antenna_days: 3,
            max_attempts_per_zone: 20_000,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.n_sites == 0 {
            return bad("n_sites must be > 0".into());
        }
        if self.antennas_per_site.is_empty()
            || self
                .antennas_per_site
                .iter()
                .any(|&(k, w)| !(1..=6).contains(&k) || !(w.is_finite() && w > 0.0))
        {
            return bad("antennas_per_site needs (count in 1..=6, weight > 0) pairs".into());
        }
        if !(self.extent_m[0] > 0.0 && self.extent_m[1] > 0.0) {
            return bad("extent_m must be positive".into());
        }
        if self.days < 14 {
            return bad(format!("study span of {} days is shorter than two weeks", self.days));
        }
        if self.archetypes.is_empty() {
            return bad("at least one archetype is required".into());
        }
        for a in &self.archetypes {
            a.category_weights()?;
            if !(a.wd_we_multiplier > 0.0 && a.density >= 0.0) {
                return bad(format!("archetype {}: multiplier must be > 0 and density >= 0", a.name));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be >= 0".into());
        }
        if !(self.background_density >= 0.0 && self.background_wd_we_multiplier > 0.0) {
            return bad("background density must be >= 0 and its multiplier > 0".into());
        }
        if !(0.0..1.0).contains(&self.zone_factor_spread) {
            return bad("zone_factor_spread must lie in [0, 1)".into());
        }
        if !(self.margin >= 0.0 && self.margin < 0.1) {
            return bad("margin must lie in [0, 0.1)".into());
        }
        self.thresholds.validate()?;
        GeoPoint::new(self.origin[0], self.origin[1]);
        project(self.origin[0], self.origin[1], self.origin_point())?;
        Ok(())
    }

    pub fn origin_point(&self) -> GeoPoint {
        GeoPoint::new(self.origin[0], self.origin[1])
    }

    /// `[min_lon, min_lat, max_lon, max_lat]` of the study area.
    pub fn bbox_lonlat(&self) -> [f64; 4] {
        let o = self.origin_point();
        let lo = unproject(PlanarPoint::new(-self.extent_m[0] / 2.0, -self.extent_m[1] / 2.0), o);
        let hi = unproject(PlanarPoint::new(self.extent_m[0] / 2.0, self.extent_m[1] / 2.0), o);
        [lo.lon, lo.lat, hi.lon, hi.lat]
    }
}

/// Study rectangle in planar coordinates from lon/lat bounds.
pub fn study_area(bbox: [f64; 4], origin: GeoPoint) -> Result<SimplePolygon> {
    let lo = project(bbox[0], bbox[1], origin)?;
    let hi = project(bbox[2], bbox[3], origin)?;
    SimplePolygon::rectangle(lo, hi)
}

/// Passes a planar point through lon/lat so that in-memory coordinates
/// equal what a reader of the written files reconstructs.
fn round_trip(p: PlanarPoint, origin: GeoPoint) -> Result<PlanarPoint> {
    let g = unproject(p, origin);
    project(g.lon, g.lat, origin)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantedZone {
    pub zone: ZonePolygon,
    pub archetype: usize,
    pub verdict: Verdict,
    pub factor: f64,
}

#[derive(Debug, Clone, Copy)]
struct Hour {
    t: i64,
    local_hour: u32,
    day: usize,
}

/// A generated scenario: geometry, plan and the traffic model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub catalog: AppCatalog,
    pub calendar: LocalCalendar,
    pub bbox: SimplePolygon,
    pub sites: Vec<AntennaSite>,
    /// Sorted by antenna id.
    pub antennas: Vec<AntennaPolygon>,
    pub zones: Vec<PlantedZone>,
    /// Planted low-user antenna-days.
    pub ineligible: BTreeSet<(String, NaiveDate)>,
    dates: Vec<NaiveDate>,
    weekday: Vec<bool>,
    hours: Vec<Hour>,
    /// Per archetype, then the city background: share of each app.
    app_shares: Vec<Vec<f64>>,
    /// Per antenna: (zone index, overlap area).
    overlaps: Vec<Vec<(usize, f64)>>,
    users: HashMap<(usize, usize), u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IneligibleDay {
    pub antenna_id: String,
    pub date: NaiveDate,
    pub rows: u64,
}

/// Bookkeeping of a written scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub seed: u64,
    pub n_sites: usize,
    pub n_antennas: usize,
    pub n_zones: usize,
    pub n_apps: usize,
    pub span: (i64, i64),
    pub traffic_rows: u64,
    pub ineligible: Vec<IneligibleDay>,
    pub ineligible_rows: u64,
    pub bbox: [f64; 4],
    pub origin: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRow {
    pub zone_id: String,
    pub archetype: String,
    pub verdict: Verdict,
    pub dominant_category: AppCategory,
    pub wd_we_multiplier: f64,
    /// Noise-free weekday/weekend ratio of the zone's attributed traffic.
    pub expected_ratio: Option<f64>,
}

pub const GROUND_TRUTH_HEADER: [&str; 6] = [
    "zone_id",
    "archetype",
    "verdict",
    "dominant_category",
    "wd_we_multiplier",
    "expected_ratio",
];

fn apportion(total: usize, weights: &[(usize, f64)]) -> Vec<usize> {
    let s: f64 = weights.iter().map(|w| w.1).sum();
    let raw: Vec<f64> = weights.iter().map(|w| w.1 / s * total as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut rest: Vec<usize> = (0..weights.len()).collect();
    rest.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let missing = total - counts.iter().sum::<usize>();
    for &i in rest.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

impl Scenario {
    pub fn generate(config: ScenarioConfig) -> Result<Scenario> {
        config.validate()?;
        let origin = config.origin_point();
        let catalog = AppCatalog::studied_apps();
        let calendar = LocalCalendar::paris_2023();
        let bbox = study_area(config.bbox_lonlat(), origin)?;
        let sites = place_sites(&config, &bbox, origin)?;
        let mut antennas = antenna_polygons(&sites, &bbox)?;
        antennas.sort_by(|a, b| a.antenna_id.cmp(&b.antenna_id));

        let zones = place_zones(&config, &bbox, &antennas, origin)?;

        let dates: Vec<NaiveDate> = (0..config.days as u64)
            .map(|i| config.start_date + Days::new(i))
            .collect();
        let weekday: Vec<bool> = dates.iter().map(|d| calendar.in_window(*d, DayWindow::Weekday)).collect();
        let mut hours = Vec::new();
        for (day, d) in dates.iter().enumerate() {
            let first = calendar.first_epoch_of(*d)?;
            for h in 0..calendar.hours_in_local_day(*d)? as i64 {
                let t = first + 3600 * h;
                hours.push(Hour {
                    t,
                    local_hour: calendar.local_datetime(t)?.hour(),
                    day,
                });
            }
        }

        let app_shares = app_shares(&config, &catalog)?;
        let overlaps = antennas
            .par_iter()
            .map(|a| {
                zones
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| z.zone.polygon.bounds().intersects(&a.polygon.bounds()))
                    .map(|(i, z)| {
                        let parts = crate::geom::ConvexParts::new(&z.zone.polygon);
                        (i, parts.intersection_area(&crate::geom::ConvexParts::new(&a.polygon)))
                    })
                    .filter(|(_, area)| *area > 0.0)
                    .collect()
            })
            .collect();

        let (ineligible, users) = plan_users(&config, &calendar, &antennas, &dates)?;
        Ok(Scenario {
            config,
            catalog,
            calendar,
            bbox,
            sites,
            antennas,
            zones,
            ineligible,
            dates,
            weekday,
            hours,
            app_shares,
            overlaps,
            users,
        })
    }

    pub fn span(&self) -> (i64, i64) {
        (self.hours[0].t, self.hours[self.hours.len() - 1].t)
    }

    pub fn n_hours(&self) -> usize {
        self.hours.len()
    }

    fn background_share(&self) -> &[f64] {
        &self.app_shares[self.config.archetypes.len()]
    }

    /// Noise-free bytes of antenna `v`, hour index `h`, app `a`.
    pub fn expected(&self, v: usize, h: usize, a: usize) -> f64 {
        let hour = self.hours[h];
        let wd = self.weekday[hour.day];
        let shape = diurnal(hour.local_hour);
        let c = &self.config;
        let bg_mult = if wd { c.background_wd_we_multiplier } else { 1.0 };
        let mut e = c.background_density * self.antennas[v].polygon.area() * bg_mult * self.background_share()[a];
        for &(z, area) in &self.overlaps[v] {
            let pz = &self.zones[z];
            let arch = &c.archetypes[pz.archetype];
            let m = if wd { arch.wd_we_multiplier } else { 1.0 };
            e += arch.density * pz.factor * area * m * self.app_shares[pz.archetype][a];
        }
        shape * e
    }

    /// Noise-free total over apps of antenna `v` on local day `day`.
    fn expected_day_total(&self, v: usize, day: usize) -> f64 {
        let n = self.catalog.len();
        self.hours
            .iter()
            .enumerate()
            .filter(|(_, h)| h.day == day)
            .map(|(i, _)| (0..n).map(|a| self.expected(v, i, a)).sum::<f64>())
            .sum()
    }

    /// Noisy integer records of one antenna on one local day, app-major
    /// within each hour. Uses the stream `traffic/<antenna>/<date>`.
    pub fn antenna_day_records(&self, v: usize, day: usize) -> Vec<TrafficRecord> {
        let id = &self.antennas[v].antenna_id;
        let mut rng = stream(self.config.seed, &format!("traffic/{id}/{}", self.dates[day]));
        let sigma = self.config.noise_sigma;
        let noise = (sigma > 0.0).then(|| LogNormal::new(-0.5 * sigma * sigma, sigma).expect("valid sigma"));
        let mut out = Vec::new();
        for (i, h) in self.hours.iter().enumerate().filter(|(_, h)| h.day == day) {
            for (a, app) in self.catalog.entries().iter().enumerate() {
                let e = self.expected(v, i, a);
                let x = match &noise {
                    Some(ln) => e * ln.sample(&mut rng),
                    None => e,
                };
                let total = x.round().max(0.0) as u64;
                // a fixed downlink share keeps both directions populated
                let down = total * 4 / 5;
                out.push(TrafficRecord {
                    antenna_id: id.clone(),
                    app_id: app.app_id.clone(),
                    timestamp: h.t,
                    downlink: down,
                    uplink: total - down,
                });
            }
        }
        out
    }

    /// Noise-free hourly series of every antenna, for checks that must not
    /// depend on sampling or integer rounding.
    pub fn expected_series(&self) -> SeriesSet {
        let axis = AppAxis::from_catalog(&self.catalog);
        let n = axis.len();
        let mut set = SeriesSet::new(axis);
        for (v, ant) in self.antennas.iter().enumerate() {
            let mut s = TrafficSeries::default();
            for (i, h) in self.hours.iter().enumerate() {
                for a in 0..n {
                    s.add(h.t, a, n, self.expected(v, i, a));
                }
            }
            set.insert(ant.antenna_id.clone(), s);
        }
        set.set_span(Some(self.span()));
        set
    }

    /// All noisy records, antenna-major then by time.
    pub fn records(&self) -> impl Iterator<Item = TrafficRecord> + '_ {
        (0..self.antennas.len()).flat_map(move |v| (0..self.dates.len()).flat_map(move |d| self.antenna_day_records(v, d)))
    }

    /// Selection weights `I_pv` of the zones that pass every stage.
    pub fn selection_weights(&self) -> Result<BTreeMap<String, Vec<(String, f64)>>> {
        let zones: Vec<ZonePolygon> = self.zones.iter().map(|z| z.zone.clone()).collect();
        let reports = run_selection(&zones, &self.antennas, &self.config.thresholds)?;
        Ok(reports
            .into_iter()
            .filter(|r| r.is_selected())
            .map(|r| (r.zone_id, r.selected.into_iter().map(|s| (s.antenna_id, s.ratio)).collect()))
            .collect())
    }

    /// Noise-free weekday/weekend ratio of every zone with at least one
    /// selected antenna, with planted ineligible antenna-days left out.
    pub fn expected_ratios(&self) -> Result<BTreeMap<String, f64>> {
        let weights = self.selection_weights()?;
        let index: HashMap<&str, usize> = self
            .antennas
            .iter()
            .enumerate()
            .map(|(i, a)| (a.antenna_id.as_str(), i))
            .collect();
        let mut needed: BTreeSet<usize> = BTreeSet::new();
        for ws in weights.values() {
            needed.extend(ws.iter().map(|(a, _)| index[a.as_str()]));
        }
        let day_totals: HashMap<usize, Vec<f64>> = needed
            .par_iter()
            .map(|&v| (v, (0..self.dates.len()).map(|d| self.expected_day_total(v, d)).collect()))
            .collect();
        let mut out = BTreeMap::new();
        for (zone, ws) in &weights {
            let mut wd = Vec::new();
            let mut we = Vec::new();
            for (d, date) in self.dates.iter().enumerate() {
                let vol: f64 = ws
                    .iter()
                    .filter(|(a, _)| !self.ineligible.contains(&(a.clone(), *date)))
                    .map(|(a, w)| w * day_totals[&index[a.as_str()]][d])
                    .sum();
                if self.calendar.in_window(*date, DayWindow::Weekday) {
                    wd.push(vol);
                } else if self.calendar.in_window(*date, DayWindow::Weekend) {
                    we.push(vol);
                }
            }
            if let (Some(a), Some(b)) = (median(&wd), median(&we)) {
                if b > 0.0 {
                    out.insert(zone.clone(), a / b);
                }
            }
        }
        Ok(out)
    }

    pub fn ground_truth(&self) -> Result<Vec<GroundTruthRow>> {
        let ratios = self.expected_ratios()?;
        self.zones
            .iter()
            .map(|z| {
                let arch = &self.config.archetypes[z.archetype];
                Ok(GroundTruthRow {
                    zone_id: z.zone.zone_id.clone(),
                    archetype: arch.name.clone(),
                    verdict: z.verdict,
                    dominant_category: arch.dominant_category()?,
                    wd_we_multiplier: arch.wd_we_multiplier,
                    expected_ratio: ratios.get(&z.zone.zone_id).copied(),
                })
            })
            .collect()
    }

    pub fn eligibility(&self) -> Result<Eligibility> {
        let mut recs = Vec::with_capacity(self.users.len());
        for (&(v, d), &u) in &self.users {
            recs.push(EligibilityRecord {
                antenna_id: self.antennas[v].antenna_id.clone(),
                date: self.dates[d],
                unique_users: u,
            });
        }
        Eligibility::from_records(recs)
    }

    pub fn socio(&self) -> Vec<SocioRecord> {
        self.zones
            .iter()
            .map(|z| {
                let mut rng = stream(self.config.seed, &format!("socio/{}", z.zone.zone_id));
                let arch = &self.config.archetypes[z.archetype];
                let jitter: f64 = rng.sample(StandardNormal);
                // income rises with the weekday orientation of the zone
                let income = 22_000.0 * (0.7 + 0.4 * arch.wd_we_multiplier) * (0.08 * jitter).exp();
                SocioRecord {
                    zone_id: z.zone.zone_id.clone(),
                    median_income: (income / 10.0).round() * 10.0,
                    gini: (rng.random_range(0.25..0.45f64) * 1000.0).round() / 1000.0,
                    dist_center: None,
                }
            })
            .collect()
    }

    /// Photo tags: archetype vocabulary, shared words, stopwords, one
    /// name tag per zone and a landmark tag planted in two zones.
    pub fn tags(&self) -> Result<TagTable> {
        let mut rows = Vec::new();
        let landmark_zones: Vec<usize> = self
            .zones
            .iter()
            .enumerate()
            .filter(|(_, z)| z.archetype == 0 && z.verdict == Verdict::Selected)
            .map(|(i, _)| i)
            .take(2)
            .collect();
        for (i, z) in self.zones.iter().enumerate() {
            let mut rng = stream(self.config.seed, &format!("tags/{}", z.zone.zone_id));
            for (k, arch) in self.config.archetypes.iter().enumerate() {
                for w in 0..ARCHETYPE_WORDS {
                    let count = if k == z.archetype {
                        rng.random_range(25..45)
                    } else {
                        rng.random_range(0..4)
                    };
                    rows.push((z.zone.zone_id.clone(), format!("{}{}", arch.name, w + 1), count));
                }
            }
            for w in COMMON_TAGS {
                rows.push((z.zone.zone_id.clone(), w.to_string(), rng.random_range(18..24)));
            }
            for w in STOPWORDS.iter().take(8) {
                rows.push((z.zone.zone_id.clone(), w.to_string(), rng.random_range(30..60)));
            }
            rows.push((z.zone.zone_id.clone(), zone_name_tag(&z.zone.zone_id), rng.random_range(40..80)));
            if landmark_zones.contains(&i) {
                rows.push((z.zone.zone_id.clone(), LANDMARK_TAG.to_string(), 60));
            }
        }
        TagTable::from_counts(rows)
    }

    /// Writes every input file plus `ground_truth.csv` and
    /// `synth_summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<SynthSummary> {
        std::fs::create_dir_all(dir)?;
        let origin = self.config.origin_point();
        let zones: Vec<ZonePolygon> = self.zones.iter().map(|z| z.zone.clone()).collect();
        ingest::write_sites(dir.join("sites.csv"), &self.sites, origin)?;
        ingest::write_zones(dir.join("zones.geojson"), &zones, origin)?;
        ingest::write_catalog(dir.join("catalog.csv"), &self.catalog)?;
        ingest::write_eligibility(dir.join("eligibility.csv"), &self.eligibility()?)?;
        ingest::write_socio(dir.join("socio.csv"), &self.socio())?;
        ingest::write_tags(dir.join("tags.csv"), &self.tags()?)?;
        self.calendar.write(&dir.join("calendar.csv"))?;
        let mut sw = BufWriter::new(File::create(dir.join("stopwords.txt"))?);
        for w in STOPWORDS {
            writeln!(sw, "{w}")?;
        }
        sw.flush()?;

        let mut w = TrafficWriter::create(dir.join("traffic.csv"))?;
        let chunk = rayon::current_num_threads().max(1) * 2;
        let jobs: Vec<(usize, usize)> = (0..self.antennas.len())
            .flat_map(|v| (0..self.dates.len()).map(move |d| (v, d)))
            .collect();
        for batch in jobs.chunks(chunk) {
            let recs: Vec<Vec<TrafficRecord>> = batch.par_iter().map(|&(v, d)| self.antenna_day_records(v, d)).collect();
            for r in recs.iter().flatten() {
                w.write(r)?;
            }
        }
        let traffic_rows = w.finish()?;

        let gt = self.ground_truth()?;
        let mut g = csv::Writer::from_path(dir.join("ground_truth.csv"))?;
        g.write_record(GROUND_TRUTH_HEADER)?;
        for r in &gt {
            g.write_record([
                r.zone_id.clone(),
                r.archetype.clone(),
                r.verdict.as_str().to_string(),
                r.dominant_category.as_str().to_string(),
                r.wd_we_multiplier.to_string(),
                r.expected_ratio.map(|x| x.to_string()).unwrap_or_default(),
            ])?;
        }
        g.flush()?;

        let n_apps = self.catalog.len() as u64;
        let ineligible: Vec<IneligibleDay> = self
            .ineligible
            .iter()
            .map(|(a, d)| {
                Ok(IneligibleDay {
                    antenna_id: a.clone(),
                    date: *d,
                    rows: self.calendar.hours_in_local_day(*d)? as u64 * n_apps,
                })
            })
            .collect::<Result<_>>()?;
        let summary = SynthSummary {
            seed: self.config.seed,
            n_sites: self.sites.len(),
            n_antennas: self.antennas.len(),
            n_zones: self.zones.len(),
            n_apps: self.catalog.len(),
            span: self.span(),
            traffic_rows,
            ineligible_rows: ineligible.iter().map(|i| i.rows).sum(),
            ineligible,
            bbox: self.config.bbox_lonlat(),
            origin: self.config.origin,
        };
        let mut f = BufWriter::new(File::create(dir.join("synth_summary.json"))?);
        serde_json::to_writer_pretty(&mut f, &summary)?;
        writeln!(f)?;
        f.flush()?;
        Ok(summary)
    }
}

const ARCHETYPE_WORDS: usize = 4;
const COMMON_TAGS: [&str; 5] = ["park", "tree", "paris", "green", "summer"];
pub const LANDMARK_TAG: &str = "toureiffel";
pub const STOPWORDS: [&str; 12] = [
    "the", "and", "of", "le", "la", "les", "de", "du", "et", "a", "in", "des",
];

pub fn zone_name_tag(zone_id: &str) -> String {
    format!("parc{}", zone_id.to_lowercase())
}

fn app_shares(config: &ScenarioConfig, catalog: &AppCatalog) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream(config.seed, "apps");
    let pop_dist = LogNormal::new(0.0, 0.5).expect("valid");
    let popularity: Vec<f64> = catalog.entries().iter().map(|_| pop_dist.sample(&mut rng)).collect();
    let mut cat_pop = [0.0; 9];
    for (e, p) in catalog.entries().iter().zip(&popularity) {
        cat_pop[e.category.index()] += p;
    }
    let mut shares = Vec::new();
    for arch in &config.archetypes {
        let w = arch.category_weights()?;
        shares.push(
            catalog
                .entries()
                .iter()
                .zip(&popularity)
                .map(|(e, p)| w[e.category.index()] * p / cat_pop[e.category.index()])
                .collect::<Vec<f64>>(),
        );
    }
    let n = shares.len() as f64;
    let background: Vec<f64> = (0..catalog.len()).map(|a| shares.iter().map(|s| s[a]).sum::<f64>() / n).collect();
    shares.push(background);
    Ok(shares)
}

fn place_sites(config: &ScenarioConfig, bbox: &SimplePolygon, origin: GeoPoint) -> Result<Vec<AntennaSite>> {
    let b = bbox.bounds();
    let area = b.width() * b.height();
    let spacing = config
        .min_site_spacing_m
        .unwrap_or(0.7 * (area / config.n_sites as f64).sqrt());
    let inset = 0.02 * spacing;
    let mut rng = stream(config.seed, "sites");
    let mut points: Vec<PlanarPoint> = Vec::with_capacity(config.n_sites);
    let max_attempts = 10_000 * config.n_sites;
    let mut attempts = 0;
    while points.len() < config.n_sites {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::invalid(format!(
                "cannot place {} sites {spacing:.1} m apart in {:.0} x {:.0} m (placed {})",
                config.n_sites,
                b.width(),
                b.height(),
                points.len()
            )));
        }
        let p = PlanarPoint::new(
            rng.random_range(b.min.x + inset..b.max.x - inset),
            rng.random_range(b.min.y + inset..b.max.y - inset),
        );
        if points.iter().all(|q| q.distance(&p) >= spacing) {
            points.push(p);
        }
    }
    let mut counts: Vec<usize> = apportion(config.n_sites, &config.antennas_per_site)
        .into_iter()
        .zip(&config.antennas_per_site)
        .flat_map(|(n, &(k, _))| std::iter::repeat_n(k, n))
        .collect();
    counts.shuffle(&mut rng);
    let mut sites = Vec::with_capacity(points.len());
    let mut next_antenna = 1;
    for (i, (p, k)) in points.into_iter().zip(counts).enumerate() {
        let rot = rng.random_range(0.0..360.0 / k as f64);
        let rot = (rot * 10.0).round() / 10.0;
        let sectors = (0..k)
            .map(|j| {
                let id = format!("A{next_antenna:04}");
                next_antenna += 1;
                AntennaSector {
                    antenna_id: id,
                    azimuth: (rot + 360.0 * j as f64 / k as f64).rem_euclid(360.0),
                }
            })
            .collect();
        sites.push(AntennaSite {
            site_id: format!("S{:03}", i + 1),
            position: round_trip(p, origin)?,
            sectors,
        });
    }
    Ok(sites)
}

/// Verdict of a candidate zone, or `None` when some coverage value lies
/// within `margin` of its threshold.
fn robust_verdict(
    zone: &ZonePolygon,
    antennas: &[AntennaPolygon],
    t: &SelectionThresholds,
    margin: f64,
) -> Result<Option<(Verdict, Vec<String>)>> {
    let all = select_antennas(std::slice::from_ref(zone), antennas, f64::MIN_POSITIVE)?;
    if all[&zone.zone_id].iter().any(|s| (s.ratio - t.alpha).abs() < margin) {
        return Ok(None);
    }
    let r = run_selection(std::slice::from_ref(zone), antennas, t)?.remove(0);
    if let Some(ip) = r.illumination {
        if (ip - t.beta).abs() < margin {
            return Ok(None);
        }
        if ip > t.beta && (r.quality.expect("quality with illumination") - t.gamma).abs() < margin {
            return Ok(None);
        }
    }
    Ok(Some((r.verdict, r.selected.into_iter().map(|s| s.antenna_id).collect())))
}

fn place_zones(
    config: &ScenarioConfig,
    bbox: &SimplePolygon,
    antennas: &[AntennaPolygon],
    origin: GeoPoint,
) -> Result<Vec<PlantedZone>> {
    let plan = config.zones;
    let mut verdicts: Vec<Verdict> = [
        (Verdict::Selected, plan.selected),
        (Verdict::NoAntenna, plan.no_antenna),
        (Verdict::LowIllumination, plan.low_illumination),
        (Verdict::LowQuality, plan.low_quality),
    ]
    .iter()
    .flat_map(|&(v, n)| std::iter::repeat_n(v, n))
    .collect();
    let mut rng = stream(config.seed, "zones");
    verdicts.shuffle(&mut rng);

    let n_arch = config.archetypes.len();
    let mut archetypes: Vec<usize> = (0..verdicts.len()).map(|i| i % n_arch).collect();
    // balance archetypes among selected zones first
    let selected_idx: Vec<usize> = (0..verdicts.len()).filter(|&i| verdicts[i] == Verdict::Selected).collect();
    let mut sel_arch: Vec<usize> = (0..selected_idx.len()).map(|i| i % n_arch).collect();
    sel_arch.shuffle(&mut rng);
    for (&i, &a) in selected_idx.iter().zip(&sel_arch) {
        archetypes[i] = a;
    }
    for i in 0..verdicts.len() {
        if verdicts[i] != Verdict::Selected {
            archetypes[i] = rng.random_range(0..n_arch);
        }
    }

    let b = bbox.bounds();
    let typical = (b.width() * b.height() / antennas.len() as f64).sqrt();
    let gap = 0.02 * typical;
    let mut placed: Vec<PlantedZone> = Vec::new();
    let mut used_antennas: BTreeSet<String> = BTreeSet::new();
    let mut anchors_used: BTreeSet<usize> = BTreeSet::new();

    // hardest placements first so the easy ones fill in around them
    let mut order: Vec<usize> = (0..verdicts.len()).collect();
    order.sort_by_key(|&i| match verdicts[i] {
        Verdict::Selected => 0,
        Verdict::LowQuality => 1,
        Verdict::LowIllumination => 2,
        Verdict::NoAntenna => 3,
    });
    let mut slots: Vec<Option<PlantedZone>> = vec![None; verdicts.len()];
    for i in order {
        let zone_id = format!("Z{:03}", i + 1);
        let target = verdicts[i];
        let mut found = None;
        for _ in 0..config.max_attempts_per_zone {
            let (center, half, anchor) = match target {
                Verdict::Selected => {
                    let k = rng.random_range(0..antennas.len());
                    if anchors_used.contains(&k) {
                        continue;
                    }
                    let p = &antennas[k].polygon;
                    let c = p.centroid();
                    let f = rng.random_range(0.35..0.85);
                    (c, (0.5 * f * p.bounds().width(), 0.5 * f * p.bounds().height()), Some(k))
                }
                Verdict::LowQuality => {
                    let k = rng.random_range(0..antennas.len());
                    let p = &antennas[k].polygon;
                    let frac: f64 = rng.random_range(0.13..0.3);
                    let side = (frac * p.area()).sqrt();
                    let aspect: f64 = rng.random_range(0.7..1.4);
                    (p.centroid(), (0.5 * side * aspect, 0.5 * side / aspect), Some(k))
                }
                Verdict::LowIllumination => {
                    let c = PlanarPoint::new(rng.random_range(b.min.x..b.max.x), rng.random_range(b.min.y..b.max.y));
                    let s = typical * rng.random_range(0.4..1.6);
                    let aspect: f64 = rng.random_range(0.5..2.0);
                    (c, (0.5 * s * aspect, 0.5 * s / aspect), None)
                }
                Verdict::NoAntenna => {
                    let c = PlanarPoint::new(rng.random_range(b.min.x..b.max.x), rng.random_range(b.min.y..b.max.y));
                    let s = typical * rng.random_range(0.05..0.15);
                    (c, (0.5 * s, 0.5 * s), None)
                }
            };
            let lo = PlanarPoint::new(center.x - half.0, center.y - half.1);
            let hi = PlanarPoint::new(center.x + half.0, center.y + half.1);
            if lo.x <= b.min.x || lo.y <= b.min.y || hi.x >= b.max.x || hi.y >= b.max.y || half.0 < 1.0 || half.1 < 1.0 {
                continue;
            }
            let ring: Vec<PlanarPoint> = [lo, PlanarPoint::new(hi.x, lo.y), hi, PlanarPoint::new(lo.x, hi.y)]
                .into_iter()
                .map(|p| round_trip(p, origin))
                .collect::<Result<_>>()?;
            let polygon = SimplePolygon::new(ring)?;
            let pb = polygon.bounds();
            let clashes = placed.iter().any(|z| {
                let q = z.zone.polygon.bounds();
                !(pb.max.x + gap < q.min.x || q.max.x + gap < pb.min.x || pb.max.y + gap < q.min.y || q.max.y + gap < pb.min.y)
            });
            if clashes {
                continue;
            }
            let zone = ZonePolygon {
                zone_id: zone_id.clone(),
                name: format!("Parc {}", &zone_id[1..]),
                polygon,
            };
            let Some((verdict, selected)) = robust_verdict(&zone, antennas, &config.thresholds, config.margin)? else {
                continue;
            };
            if verdict != target {
                continue;
            }
            if target == Verdict::Selected && config.exclusive_selected && selected.iter().any(|a| used_antennas.contains(a)) {
                continue;
            }
            if target == Verdict::Selected {
                used_antennas.extend(selected);
                anchors_used.extend(anchor);
            }
            let spread = config.zone_factor_spread;
            let factor = if spread > 0.0 { rng.random_range(1.0 - spread..1.0 + spread) } else { 1.0 };
            found = Some(PlantedZone {
                zone,
                archetype: archetypes[i],
                verdict: target,
                factor,
            });
            break;
        }
        let z = found.ok_or_else(|| {
            Error::invalid(format!(
                "could not plant zone {zone_id} with verdict {} in {} attempts ({} zones placed); \
                 enlarge the study area or add sites",
                target.as_str(),
                config.max_attempts_per_zone,
                placed.len()
            ))
        })?;
        placed.push(z.clone());
        slots[i] = Some(z);
    }
    Ok(slots.into_iter().map(|z| z.expect("every slot planted")).collect())
}

fn plan_users(
    config: &ScenarioConfig,
    calendar: &LocalCalendar,
    antennas: &[AntennaPolygon],
    dates: &[NaiveDate],
) -> Result<(BTreeSet<(String, NaiveDate)>, HashMap<(usize, usize), u64>)> {
    let mut rng = stream(config.seed, "eligibility");
    let full_days: Vec<usize> = (0..dates.len())
        .filter(|&d| calendar.hours_in_local_day(dates[d]).map(|h| h == 24).unwrap_or(false))
        .collect();
    let mut candidates: Vec<(usize, usize)> = (0..antennas.len())
        .flat_map(|v| full_days.iter().map(move |&d| (v, d)))
        .collect();
    if config.ineligible_antenna_days > candidates.len() {
        return Err(Error::invalid("more ineligible antenna-days requested than exist"));
    }
    candidates.shuffle(&mut rng);
    let low: BTreeSet<(usize, usize)> = candidates.into_iter().take(config.ineligible_antenna_days).collect();
    let mut users = HashMap::new();
    for v in 0..antennas.len() {
        for d in 0..dates.len() {
            let u = if low.contains(&(v, d)) {
                rng.random_range(0..10)
            } else {
                rng.random_range(40..400)
            };
            users.insert((v, d), u);
        }
    }
    let ineligible = low
        .into_iter()
        .map(|(v, d)| (antennas[v].antenna_id.clone(), dates[d]))
        .collect();
    Ok((ineligible, users))
}

/// Reads `ground_truth.csv`.
pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruthRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    if rdr.headers()?.iter().ne(GROUND_TRUTH_HEADER.iter().copied()) {
        return Err(Error::parse(path, "unexpected ground truth header"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let ratio = rec[5].trim();
        out.push(GroundTruthRow {
            zone_id: rec[0].to_string(),
            archetype: rec[1].to_string(),
            verdict: rec[2].parse()?,
            dominant_category: rec[3].parse()?,
            wd_we_multiplier: rec[4].parse().map_err(|e| Error::parse(path, format!("{e}")))?,
            expected_ratio: if ratio.is_empty() {
                None
            } else {
                Some(ratio.parse().map_err(|e| Error::parse(path, format!("{e}")))?)
            },
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioError {
    pub zone_id: String,
    pub expected: f64,
    pub measured: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    /// ARI of recovered clusters against planted archetypes.
    pub ari: Option<f64>,
    /// (planted, recovered) verdict counts.
    pub confusion: BTreeMap<(Verdict, Verdict), usize>,
    pub verdicts_exact: bool,
    pub ratio_errors: Vec<RatioError>,
    pub max_ratio_error: Option<f64>,
}

/// Scores recovered verdicts, cluster labels and ratios against the
/// planted truth. Every recovered id must exist in the ground truth.
pub fn evaluate_recovery(
    truth: &[GroundTruthRow],
    verdicts: &BTreeMap<String, Verdict>,
    labels: &BTreeMap<String, usize>,
    ratios: &BTreeMap<String, f64>,
) -> Result<RecoveryReport> {
    let by_id: BTreeMap<&str, &GroundTruthRow> = truth.iter().map(|r| (r.zone_id.as_str(), r)).collect();
    for id in verdicts.keys().chain(labels.keys()).chain(ratios.keys()) {
        if !by_id.contains_key(id.as_str()) {
            return Err(Error::invalid(format!("zone {id} is not in the ground truth")));
        }
    }
    if verdicts.len() != truth.len() && !verdicts.is_empty() {
        return Err(Error::invalid(format!(
            "{} recovered verdicts for {} planted zones",
            verdicts.len(),
            truth.len()
        )));
    }
    let mut confusion = BTreeMap::new();
    for (id, v) in verdicts {
        *confusion.entry((by_id[id.as_str()].verdict, *v)).or_insert(0) += 1;
    }
    let verdicts_exact = confusion.iter().all(|((a, b), _)| a == b);
    let ari = if labels.len() >= 2 {
        let names: BTreeMap<&str, usize> = {
            let mut m = BTreeMap::new();
            for r in truth {
                let n = m.len();
                m.entry(r.archetype.as_str()).or_insert(n);
            }
            m
        };
        let planted: Vec<usize> = labels.keys().map(|z| names[by_id[z.as_str()].archetype.as_str()]).collect();
        let got: Vec<usize> = labels.values().copied().collect();
        Some(crate::cluster::adjusted_rand(&planted, &got)?)
    } else {
        None
    };
    let mut ratio_errors = Vec::new();
    for (id, &measured) in ratios {
        if let Some(expected) = by_id[id.as_str()].expected_ratio {
            ratio_errors.push(RatioError {
                zone_id: id.clone(),
                expected,
                measured,
                relative_error: (measured - expected).abs() / expected,
            });
        }
    }
    let max_ratio_error = ratio_errors.iter().map(|e| e.relative_error).fold(None, |m: Option<f64>, e| {
        Some(m.map_or(e, |m| m.max(e)))
    });
    Ok(RecoveryReport {
        ari,
        confusion,
        verdicts_exact,
        ratio_errors,
        max_ratio_error,
    })
}
