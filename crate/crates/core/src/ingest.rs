//! Input file formats: parsing, validation and the matching writers.
//!
//! All CSVs are UTF-8, comma-delimited, with a fixed header line. Zones are
//! a GeoJSON FeatureCollection of Polygon features in lon/lat.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::calendar::LocalCalendar;
use crate::error::{Error, Result};
use crate::geom::{project, unproject, GeoPoint, PlanarPoint, SimplePolygon};
use crate::model::{AntennaSector, AntennaSite, ZonePolygon};
use crate::tags::TagTable;

pub const TRAFFIC_HEADER: [&str; 5] = ["antenna_id", "app_id", "timestamp", "downlink", "uplink"];
pub const SITES_HEADER: [&str; 5] = ["site_id", "antenna_id", "lon", "lat", "azimuth_deg"];
pub const CATALOG_HEADER: [&str; 3] = ["app_id", "app_name", "category"];
pub const SOCIO_HEADER: [&str; 4] = ["zone_id", "median_income", "gini", "dist_center"];
pub const TAGS_HEADER: [&str; 3] = ["zone_id", "tag", "count"];
pub const ELIGIBILITY_HEADER: [&str; 3] = ["antenna_id", "date", "unique_users"];

/// Share of malformed traffic rows above which loading fails.
pub const MAX_MALFORMED_SHARE: f64 = 0.01;

pub const DEFAULT_MIN_USERS: u64 = 10;

fn check_header(path: &Path, rdr: &mut csv::Reader<impl std::io::Read>, expected: &[&str]) -> Result<()> {
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(path, format!("cannot read header: {e}")))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            path,
            format!("missing or unexpected header (expected `{}`)", expected.join(",")),
        ));
    }
    Ok(())
}

fn reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::parse(path, format!("cannot open: {e}")))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(BufReader::with_capacity(1 << 20, file)))
}

fn field<T: FromStr>(path: &Path, line: u64, name: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| Error::parse(path, format!("line {line}: field {name} = {raw:?}: {e}")))
}

// ---------------------------------------------------------------- traffic

/// Hourly traffic of one app at one antenna.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrafficRecord {
    pub antenna_id: String,
    pub app_id: String,
    /// UTC epoch seconds, hour-aligned.
    pub timestamp: i64,
    pub downlink: u64,
    pub uplink: u64,
}

impl TrafficRecord {
    /// Downlink plus uplink bytes.
    pub fn volume(&self) -> u64 {
        self.downlink + self.uplink
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows: u64,
    pub accepted: u64,
    pub malformed: Vec<RowError>,
}

/// Streaming reader for traffic files. Malformed rows are skipped and
/// collected; call [`TrafficReader::finish`] once drained to apply the
/// malformed-share limit.
pub struct TrafficReader {
    path: PathBuf,
    inner: csv::Reader<BufReader<File>>,
    record: csv::StringRecord,
    report: LoadReport,
}

impl TrafficReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut inner = reader(&path)?;
        check_header(&path, &mut inner, &TRAFFIC_HEADER)?;
        Ok(TrafficReader {
            path,
            inner,
            record: csv::StringRecord::new(),
            report: LoadReport::default(),
        })
    }

    fn parse_row(&self) -> std::result::Result<TrafficRecord, String> {
        let r = &self.record;
        if r.len() != 5 {
            return Err(format!("expected 5 fields, found {}", r.len()));
        }
        let id = |i: usize, name: &str| -> std::result::Result<String, String> {
            let s = r[i].trim();
            if s.is_empty() {
                Err(format!("empty {name}"))
            } else {
                Ok(s.to_string())
            }
        };
        let bytes = |i: usize, name: &str| -> std::result::Result<u64, String> {
            let s = r[i].trim();
            if s.starts_with('-') {
                return Err(format!("negative {name} bytes ({s})"));
            }
            s.parse::<u64>().map_err(|e| format!("{name} = {s:?}: {e}"))
        };
        let timestamp: i64 = r[2].trim().parse().map_err(|e| format!("timestamp = {:?}: {e}", &r[2]))?;
        if timestamp.rem_euclid(3600) != 0 {
            return Err(format!("timestamp {timestamp} is not hour-aligned"));
        }
        Ok(TrafficRecord {
            antenna_id: id(0, "antenna_id")?,
            app_id: id(1, "app_id")?,
            timestamp,
            downlink: bytes(3, "downlink")?,
            uplink: bytes(4, "uplink")?,
        })
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    /// Fails when more than 1% of the rows were malformed; otherwise logs
    /// the skipped rows and returns the report.
    pub fn finish(self) -> Result<LoadReport> {
        let r = self.report;
        if r.rows > 0 && r.malformed.len() as f64 > MAX_MALFORMED_SHARE * r.rows as f64 {
            let first: Vec<String> = r.malformed.iter().take(5).map(|e| e.to_string()).collect();
            return Err(Error::parse(
                &self.path,
                format!(
                    "{} of {} rows malformed (limit 1%); first: {}",
                    r.malformed.len(),
                    r.rows,
                    first.join("; ")
                ),
            ));
        }
        for e in &r.malformed {
            log::warn!("{}: skipped {}", self.path.display(), e);
        }
        Ok(r)
    }
}

impl Iterator for TrafficReader {
    type Item = TrafficRecord;

    fn next(&mut self) -> Option<TrafficRecord> {
        loop {
            match self.inner.read_record(&mut self.record) {
                Ok(false) => return None,
                Ok(true) => {
                    self.report.rows += 1;
                    let line = self.record.position().map(|p| p.line()).unwrap_or(0);
                    match self.parse_row() {
                        Ok(rec) => {
                            self.report.accepted += 1;
                            return Some(rec);
                        }
                        Err(message) => self.report.malformed.push(RowError { line, message }),
                    }
                }
                Err(e) => {
                    self.report.rows += 1;
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    self.report.malformed.push(RowError {
                        line,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
}

/// Reads a whole traffic file into memory.
pub fn load_traffic(path: impl AsRef<Path>) -> Result<(Vec<TrafficRecord>, LoadReport)> {
    let mut rdr = TrafficReader::open(path)?;
    let records: Vec<TrafficRecord> = rdr.by_ref().collect();
    let report = rdr.finish()?;
    Ok((records, report))
}

pub struct TrafficWriter {
    inner: BufWriter<File>,
    written: u64,
}

impl TrafficWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let mut inner = BufWriter::with_capacity(1 << 20, File::create(path)?);
        writeln!(inner, "{}", TRAFFIC_HEADER.join(","))?;
        Ok(TrafficWriter { inner, written: 0 })
    }

    pub fn write(&mut self, r: &TrafficRecord) -> Result<()> {
        writeln!(
            self.inner,
            "{},{},{},{},{}",
            r.antenna_id, r.app_id, r.timestamp, r.downlink, r.uplink
        )?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.inner.flush()?;
        Ok(self.written)
    }
}

// ------------------------------------------------------------ eligibility

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibilityRecord {
    pub antenna_id: String,
    pub date: NaiveDate,
    pub unique_users: u64,
}

/// Daily unique-user counts per antenna. Antenna-days absent from the
/// table are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Eligibility {
    users: HashMap<(String, NaiveDate), u64>,
}

impl Eligibility {
    pub fn from_records(records: impl IntoIterator<Item = EligibilityRecord>) -> Result<Self> {
        let mut users = HashMap::new();
        for r in records {
            let key = (r.antenna_id.clone(), r.date);
            if users.insert(key, r.unique_users).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate eligibility row for antenna {} on {}",
                    r.antenna_id, r.date
                )));
            }
        }
        Ok(Eligibility { users })
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Antenna-days below `min_users`, sorted.
    pub fn ineligible(&self, min_users: u64) -> BTreeSet<(String, NaiveDate)> {
        self.users
            .iter()
            .filter(|(_, &u)| u < min_users)
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn records(&self) -> Vec<EligibilityRecord> {
        let mut v: Vec<EligibilityRecord> = self
            .users
            .iter()
            .map(|((a, d), &u)| EligibilityRecord {
                antenna_id: a.clone(),
                date: *d,
                unique_users: u,
            })
            .collect();
        v.sort_by(|a, b| (&a.antenna_id, a.date).cmp(&(&b.antenna_id, b.date)));
        v
    }
}

/// Drops traffic of antenna-days (local calendar days) that served fewer
/// than `min_users` unique users.
#[derive(Debug, Clone)]
pub struct EligibilityFilter<'a> {
    ineligible: HashMap<&'a str, BTreeSet<NaiveDate>>,
    calendar: &'a LocalCalendar,
}

impl<'a> EligibilityFilter<'a> {
    pub fn new(eligibility: Option<&'a Eligibility>, min_users: u64, calendar: &'a LocalCalendar) -> Self {
        let mut ineligible: HashMap<&'a str, BTreeSet<NaiveDate>> = HashMap::new();
        if let Some(e) = eligibility {
            for ((a, d), &u) in &e.users {
                if u < min_users {
                    ineligible.entry(a.as_str()).or_default().insert(*d);
                }
            }
        }
        EligibilityFilter { ineligible, calendar }
    }

    pub fn keeps(&self, r: &TrafficRecord) -> Result<bool> {
        match self.ineligible.get(r.antenna_id.as_str()) {
            None => Ok(true),
            Some(days) => Ok(!days.contains(&self.calendar.local_date(r.timestamp)?)),
        }
    }
}

/// Iterator form of the eligibility filter. Records whose timestamp the
/// calendar cannot place are dropped and reported through `log`.
pub fn apply_eligibility<'a, I>(records: I, filter: &'a EligibilityFilter<'a>) -> impl Iterator<Item = TrafficRecord> + 'a
where
    I: IntoIterator<Item = TrafficRecord> + 'a,
{
    records.into_iter().filter(move |r| match filter.keeps(r) {
        Ok(k) => k,
        Err(e) => {
            log::warn!("dropping record: {e}");
            false
        }
    })
}

pub fn load_eligibility(path: impl AsRef<Path>) -> Result<Eligibility> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &ELIGIBILITY_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        out.push(EligibilityRecord {
            antenna_id: rec[0].trim().to_string(),
            date: field(path, line, "date", &rec[1])?,
            unique_users: field(path, line, "unique_users", &rec[2])?,
        });
    }
    Eligibility::from_records(out).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_eligibility(path: impl AsRef<Path>, e: &Eligibility) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ELIGIBILITY_HEADER)?;
    for r in e.records() {
        w.write_record([r.antenna_id, r.date.to_string(), r.unique_users.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

// ------------------------------------------------------------------ zones

/// Reads Polygon features; each needs `zone_id` (string or number) and an
/// optional `name` property. Holes and multipolygons are rejected.
pub fn load_zones(path: impl AsRef<Path>, origin: GeoPoint) -> Result<Vec<ZonePolygon>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::parse(path, format!("cannot open: {e}")))?;
    let doc: Value = serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(path, e.to_string()))?;
    parse_zones(&doc, origin).map_err(|e| match e {
        Error::InvalidInput(m) | Error::Geometry(m) => Error::parse(path, m),
        other => other,
    })
}

pub fn parse_zones(doc: &Value, origin: GeoPoint) -> Result<Vec<ZonePolygon>> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::invalid("zones must be a GeoJSON FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::invalid("FeatureCollection without a features array"))?;
    let mut seen = BTreeSet::new();
    let mut zones = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        let zone_id = match props.get("zone_id") {
            Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(Error::invalid(format!("feature {i}: missing zone_id property"))),
        };
        if !seen.insert(zone_id.clone()) {
            return Err(Error::invalid(format!("duplicate zone_id {zone_id:?}")));
        }
        let name = props.get("name").and_then(Value::as_str).unwrap_or(&zone_id).to_string();
        let geom = f
            .get("geometry")
            .ok_or_else(|| Error::invalid(format!("zone {zone_id}: missing geometry")))?;
        let kind = geom.get("type").and_then(Value::as_str).unwrap_or("");
        if kind != "Polygon" {
            return Err(Error::invalid(format!(
                "zone {zone_id}: geometry type {kind:?} not supported (Polygon only)"
            )));
        }
        let rings = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::invalid(format!("zone {zone_id}: missing coordinates")))?;
        if rings.len() != 1 {
            return Err(Error::invalid(format!(
                "zone {zone_id}: polygons with holes are not supported ({} rings)",
                rings.len()
            )));
        }
        let ring = rings[0]
            .as_array()
            .ok_or_else(|| Error::invalid(format!("zone {zone_id}: ring is not an array")))?;
        let mut pts = Vec::with_capacity(ring.len());
        for c in ring {
            let pair = c.as_array().filter(|a| a.len() >= 2);
            let (lon, lat) = match pair.map(|a| (a[0].as_f64(), a[1].as_f64())) {
                Some((Some(lon), Some(lat))) => (lon, lat),
                _ => return Err(Error::invalid(format!("zone {zone_id}: malformed position {c}"))),
            };
            pts.push(project(lon, lat, origin)?);
        }
        let polygon = SimplePolygon::new(pts).map_err(|e| Error::invalid(format!("zone {zone_id}: {e}")))?;
        zones.push(ZonePolygon { zone_id, name, polygon });
    }
    Ok(zones)
}

pub fn zones_to_geojson(zones: &[ZonePolygon], origin: GeoPoint) -> Value {
    let features: Vec<Value> = zones
        .iter()
        .map(|z| {
            let mut ring: Vec<Value> = z
                .polygon
                .vertices()
                .iter()
                .map(|p| {
                    let g = unproject(*p, origin);
                    json!([g.lon, g.lat])
                })
                .collect();
            ring.push(ring[0].clone());
            json!({
                "type": "Feature",
                "properties": {"zone_id": z.zone_id, "name": z.name},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

pub fn write_zones(path: impl AsRef<Path>, zones: &[ZonePolygon], origin: GeoPoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &zones_to_geojson(zones, origin))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

// ------------------------------------------------------------------ sites

/// Groups antenna rows by site. Rows of one site must agree on position;
/// antenna ids must be unique. Sites come back sorted by id.
pub fn load_sites(path: impl AsRef<Path>, origin: GeoPoint) -> Result<Vec<AntennaSite>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &SITES_HEADER)?;
    let mut sites: BTreeMap<String, (GeoPoint, Vec<AntennaSector>)> = BTreeMap::new();
    let mut antennas = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let site_id = rec[0].trim().to_string();
        let antenna_id = rec[1].trim().to_string();
        if site_id.is_empty() || antenna_id.is_empty() {
            return Err(Error::parse(path, format!("line {line}: empty site_id or antenna_id")));
        }
        let g = GeoPoint::new(field(path, line, "lon", &rec[2])?, field(path, line, "lat", &rec[3])?);
        let azimuth: f64 = field(path, line, "azimuth_deg", &rec[4])?;
        if !(0.0..360.0).contains(&azimuth) {
            return Err(Error::parse(path, format!("line {line}: azimuth {azimuth} outside [0, 360)")));
        }
        if !antennas.insert(antenna_id.clone()) {
            return Err(Error::parse(path, format!("line {line}: duplicate antenna_id {antenna_id:?}")));
        }
        let entry = sites.entry(site_id.clone()).or_insert_with(|| (g, Vec::new()));
        if entry.0 != g {
            return Err(Error::parse(
                path,
                format!("line {line}: site {site_id} listed at two different positions"),
            ));
        }
        entry.1.push(AntennaSector { antenna_id, azimuth });
    }
    let mut out = Vec::with_capacity(sites.len());
    for (site_id, (g, mut sectors)) in sites {
        sectors.sort_by(|a, b| a.azimuth.total_cmp(&b.azimuth));
        let position = project(g.lon, g.lat, origin).map_err(|e| Error::parse(path, format!("site {site_id}: {e}")))?;
        let site = AntennaSite {
            site_id,
            position,
            sectors,
        };
        site.sector_spec()
            .map_err(|e| Error::parse(path, format!("site {}: {e}", site.site_id)))?;
        out.push(site);
    }
    Ok(out)
}

pub fn write_sites(path: impl AsRef<Path>, sites: &[AntennaSite], origin: GeoPoint) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SITES_HEADER)?;
    for s in sites {
        let g = unproject(s.position, origin);
        for a in &s.sectors {
            w.write_record([
                s.site_id.clone(),
                a.antenna_id.clone(),
                g.lon.to_string(),
                g.lat.to_string(),
                a.azimuth.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- catalog

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AppCategory {
    Fitness,
    Games,
    Music,
    News,
    Productivity,
    Shopping,
    Social,
    Travel,
    Video,
}

impl AppCategory {
    pub const ALL: [AppCategory; 9] = [
        AppCategory::Fitness,
        AppCategory::Games,
        AppCategory::Music,
        AppCategory::News,
        AppCategory::Productivity,
        AppCategory::Shopping,
        AppCategory::Social,
        AppCategory::Travel,
        AppCategory::Video,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AppCategory::Fitness => "Fitness",
            AppCategory::Games => "Games",
            AppCategory::Music => "Music",
            AppCategory::News => "News",
            AppCategory::Productivity => "Productivity",
            AppCategory::Shopping => "Shopping",
            AppCategory::Social => "Social",
            AppCategory::Travel => "Travel",
            AppCategory::Video => "Video",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for AppCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AppCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        AppCategory::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| {
                let names: Vec<&str> = AppCategory::ALL.iter().map(|c| c.as_str()).collect();
                Error::invalid(format!("unknown app category {t:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppCatalogEntry {
    pub app_id: String,
    pub app_name: String,
    pub category: AppCategory,
}

/// Apps under study, kept in catalog (file) order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AppCatalog {
    entries: Vec<AppCatalogEntry>,
    index: HashMap<String, usize>,
}

const DEFAULT_APPS: [(&str, AppCategory); 41] = [
    ("Garmin Connect", AppCategory::Fitness),
    ("Pokemon Go", AppCategory::Games),
    ("Fortnite", AppCategory::Games),
    ("Apple Music", AppCategory::Music),
    ("Spotify", AppCategory::Music),
    ("Deezer", AppCategory::Music),
    ("Soundcloud", AppCategory::Music),
    ("Wikipedia", AppCategory::News),
    ("Sports News", AppCategory::News),
    ("NewsPaper", AppCategory::News),
    ("NewsMag", AppCategory::News),
    ("Weather", AppCategory::News),
    ("Tripadvisor", AppCategory::News),
    ("Skype", AppCategory::Productivity),
    ("Microsoft Mail", AppCategory::Productivity),
    ("Google Drive", AppCategory::Productivity),
    ("Gmail", AppCategory::Productivity),
    ("Finances", AppCategory::Productivity),
    ("Dropbox", AppCategory::Productivity),
    ("Amazon", AppCategory::Shopping),
    ("Instagram", AppCategory::Social),
    ("WhatsApp", AppCategory::Social),
    ("Facebook", AppCategory::Social),
    ("SnapChat", AppCategory::Social),
    ("LinkedIn", AppCategory::Social),
    ("Pinterest", AppCategory::Social),
    ("Twitter", AppCategory::Social),
    ("Facebook Messenger", AppCategory::Social),
    ("TikTok", AppCategory::Social),
    ("Uber", AppCategory::Travel),
    ("Waze", AppCategory::Travel),
    ("Airfrance", AppCategory::Travel),
    ("Transport", AppCategory::Travel),
    ("Twitch", AppCategory::Video),
    ("Periscope", AppCategory::Video),
    ("Youtube", AppCategory::Video),
    ("Netflix", AppCategory::Video),
    ("Molotov TV", AppCategory::Video),
    ("DailyMotion", AppCategory::Video),
    ("Apple Video", AppCategory::Video),
    ("Facebook Live", AppCategory::Video),
];

impl AppCatalog {
    pub fn new(entries: Vec<AppCatalogEntry>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.app_id.trim().is_empty() {
                return Err(Error::invalid("catalog entry with empty app_id"));
            }
            if index.insert(e.app_id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate app_id {:?} in catalog", e.app_id)));
            }
        }
        Ok(AppCatalog { entries, index })
    }

    /// The 41 studied apps in nine categories, with 5-digit ids from 10001.
    pub fn studied_apps() -> Self {
        let entries = DEFAULT_APPS
            .iter()
            .enumerate()
            .map(|(i, (name, cat))| AppCatalogEntry {
                app_id: format!("{}", 10001 + i),
                app_name: name.to_string(),
                category: *cat,
            })
            .collect();
        AppCatalog::new(entries).expect("static catalog is valid")
    }

    pub fn entries(&self) -> &[AppCatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, app_id: &str) -> Option<&AppCatalogEntry> {
        self.index.get(app_id).map(|&i| &self.entries[i])
    }

    pub fn category_of(&self, app_id: &str) -> Option<AppCategory> {
        self.get(app_id).map(|e| e.category)
    }

    pub fn position(&self, app_id: &str) -> Option<usize> {
        self.index.get(app_id).copied()
    }

    pub fn app_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.app_id.as_str())
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<AppCatalog> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &CATALOG_HEADER)?;
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let category = rec[2]
            .parse::<AppCategory>()
            .map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        entries.push(AppCatalogEntry {
            app_id: rec[0].trim().to_string(),
            app_name: rec[1].trim().to_string(),
            category,
        });
    }
    AppCatalog::new(entries).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_catalog(path: impl AsRef<Path>, catalog: &AppCatalog) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CATALOG_HEADER)?;
    for e in catalog.entries() {
        w.write_record([e.app_id.as_str(), e.app_name.as_str(), e.category.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

// ------------------------------------------------------------------ socio

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocioRecord {
    pub zone_id: String,
    pub median_income: f64,
    pub gini: f64,
    /// Meters to the city center; filled from zone geometry when absent.
    pub dist_center: Option<f64>,
}

impl SocioRecord {
    fn validate(&self) -> Result<()> {
        if !(self.median_income > 0.0 && self.median_income.is_finite()) {
            return Err(Error::invalid(format!("zone {}: median_income must be > 0", self.zone_id)));
        }
        if !(0.0..=1.0).contains(&self.gini) {
            return Err(Error::invalid(format!("zone {}: gini must lie in [0, 1]", self.zone_id)));
        }
        if let Some(d) = self.dist_center {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::invalid(format!("zone {}: dist_center must be >= 0", self.zone_id)));
            }
        }
        Ok(())
    }
}

pub fn load_socio(path: impl AsRef<Path>) -> Result<Vec<SocioRecord>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &SOCIO_HEADER)?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let dist = rec[3].trim();
        let r = SocioRecord {
            zone_id: rec[0].trim().to_string(),
            median_income: field(path, line, "median_income", &rec[1])?,
            gini: field(path, line, "gini", &rec[2])?,
            dist_center: if dist.is_empty() {
                None
            } else {
                Some(field(path, line, "dist_center", dist)?)
            },
        };
        r.validate().map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        if !seen.insert(r.zone_id.clone()) {
            return Err(Error::parse(path, format!("line {line}: duplicate zone_id {}", r.zone_id)));
        }
        out.push(r);
    }
    Ok(out)
}

/// Fills missing `dist_center` with the distance from the zone centroid
/// to `center`.
pub fn fill_distances(records: &mut [SocioRecord], zones: &[ZonePolygon], center: PlanarPoint) {
    let centroids: HashMap<&str, PlanarPoint> = zones.iter().map(|z| (z.zone_id.as_str(), z.polygon.centroid())).collect();
    for r in records.iter_mut() {
        if r.dist_center.is_none() {
            r.dist_center = centroids.get(r.zone_id.as_str()).map(|c| c.distance(&center));
        }
    }
}

pub fn write_socio(path: impl AsRef<Path>, records: &[SocioRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SOCIO_HEADER)?;
    for r in records {
        w.write_record([
            r.zone_id.clone(),
            r.median_income.to_string(),
            r.gini.to_string(),
            r.dist_center.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ------------------------------------------------------------------- tags

pub fn load_tags(path: impl AsRef<Path>) -> Result<TagTable> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &TAGS_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let count: u64 = field(path, line, "count", &rec[2])?;
        rows.push((rec[0].trim().to_string(), rec[1].trim().to_string(), count));
    }
    TagTable::from_counts(rows).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_tags(path: impl AsRef<Path>, table: &TagTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TAGS_HEADER)?;
    for ((zone, tag), count) in table.cells() {
        w.write_record([zone.as_str(), tag.as_str(), &count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One word per line; blank lines and `#` comments are ignored. Words are
/// lowercased.
pub fn load_word_list(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::parse(path, format!("cannot read: {e}")))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}
