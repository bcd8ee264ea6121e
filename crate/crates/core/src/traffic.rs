//! Hourly per-app traffic series, antenna-to-zone conversion and daily
//! aggregation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::calendar::{DayWindow, LocalCalendar};
use crate::error::{Error, Result};
use crate::ingest::{AppCatalog, TrafficRecord};
use crate::stats::median;

/// Fixed, ordered list of app ids shared by every series in a set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppAxis {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl AppAxis {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate app id {n:?}")));
            }
        }
        Ok(AppAxis { names, index })
    }

    pub fn from_catalog(catalog: &AppCatalog) -> Self {
        AppAxis::new(catalog.app_ids().map(str::to_string).collect()).expect("catalog ids are unique")
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn position(&self, app_id: &str) -> Option<usize> {
        self.index.get(app_id).copied()
    }
}

/// Volumes in bytes keyed by hour, each hour a dense vector over the app
/// axis of the owning [`SeriesSet`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrafficSeries {
    hours: BTreeMap<i64, Vec<f64>>,
}

impl TrafficSeries {
    pub fn add(&mut self, timestamp: i64, app: usize, n_apps: usize, bytes: f64) {
        self.hours.entry(timestamp).or_insert_with(|| vec![0.0; n_apps])[app] += bytes;
    }

    pub fn get(&self, timestamp: i64, app: usize) -> f64 {
        self.hours.get(&timestamp).map_or(0.0, |v| v[app])
    }

    /// Hours in increasing order.
    pub fn hours(&self) -> impl Iterator<Item = (i64, &[f64])> {
        self.hours.iter().map(|(&t, v)| (t, v.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.hours.values().map(|v| v.iter().sum::<f64>()).sum()
    }

    /// Per-app totals over the hours accepted by `keep`.
    pub fn app_totals(&self, n_apps: usize, mut keep: impl FnMut(i64) -> bool) -> Vec<f64> {
        let mut out = vec![0.0; n_apps];
        for (&t, v) in &self.hours {
            if keep(t) {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += x;
                }
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> TrafficSeries {
        TrafficSeries {
            hours: self
                .hours
                .iter()
                .map(|(&t, v)| (t, v.iter().map(|x| x * c).collect()))
                .collect(),
        }
    }
}

/// Series for a set of units (antennas or zones) over one app axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSet {
    axis: AppAxis,
    units: BTreeMap<String, TrafficSeries>,
    /// First and last hour seen in the input records.
    span: Option<(i64, i64)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub records: u64,
    pub unknown_app_records: u64,
}

impl SeriesSet {
    pub fn new(axis: AppAxis) -> Self {
        SeriesSet {
            axis,
            units: BTreeMap::new(),
            span: None,
        }
    }

    /// Aggregates records by antenna. Records for apps outside the axis are
    /// counted and skipped; repeated (antenna, app, hour) rows are summed.
    pub fn from_records(axis: AppAxis, records: impl IntoIterator<Item = TrafficRecord>) -> (Self, BuildReport) {
        let mut set = SeriesSet::new(axis);
        let mut rep = BuildReport::default();
        let n = set.axis.len();
        for r in records {
            rep.records += 1;
            let Some(app) = set.axis.position(&r.app_id) else {
                rep.unknown_app_records += 1;
                continue;
            };
            set.extend_span(r.timestamp);
            let v = r.volume() as f64;
            match set.units.get_mut(&r.antenna_id) {
                Some(s) => s.add(r.timestamp, app, n, v),
                None => {
                    let mut s = TrafficSeries::default();
                    s.add(r.timestamp, app, n, v);
                    set.units.insert(r.antenna_id, s);
                }
            }
        }
        (set, rep)
    }

    fn extend_span(&mut self, t: i64) {
        self.span = Some(match self.span {
            None => (t, t),
            Some((a, b)) => (a.min(t), b.max(t)),
        });
    }

    pub fn insert(&mut self, unit: String, series: TrafficSeries) {
        if let (Some(&first), Some(&last)) = (series.hours.keys().next(), series.hours.keys().next_back()) {
            self.extend_span(first);
            self.extend_span(last);
        }
        self.units.insert(unit, series);
    }

    pub fn set_span(&mut self, span: Option<(i64, i64)>) {
        self.span = span;
    }

    pub fn axis(&self) -> &AppAxis {
        &self.axis
    }

    pub fn span(&self) -> Option<(i64, i64)> {
        self.span
    }

    pub fn get(&self, unit: &str) -> Option<&TrafficSeries> {
        self.units.get(unit)
    }

    /// Units in id order.
    pub fn units(&self) -> impl Iterator<Item = (&str, &TrafficSeries)> {
        self.units.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.units.values().map(TrafficSeries::total).sum()
    }
}

/// Zone series as the weighted sum of selected antenna series:
/// `T_p(t) = sum_v I_pv * T_v(t)` per app and hour. Antennas absent from
/// `antennas` contribute zero. Antennas are summed in id order.
pub fn zone_traffic(antennas: &SeriesSet, weights: &BTreeMap<String, Vec<(String, f64)>>) -> Result<SeriesSet> {
    let n = antennas.axis.len();
    for (zone, ws) in weights {
        for (a, w) in ws {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::invalid(format!("zone {zone}: weight {w} for antenna {a} is not >= 0")));
            }
        }
    }
    let zones: Vec<(String, TrafficSeries)> = weights
        .par_iter()
        .map(|(zone, ws)| {
            let mut ws: Vec<&(String, f64)> = ws.iter().collect();
            ws.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = TrafficSeries::default();
            for (a, w) in ws {
                let Some(s) = antennas.units.get(a) else { continue };
                for (&t, v) in &s.hours {
                    let acc = out.hours.entry(t).or_insert_with(|| vec![0.0; n]);
                    for (o, x) in acc.iter_mut().zip(v) {
                        *o += w * x;
                    }
                }
            }
            (zone.clone(), out)
        })
        .collect();
    let mut set = SeriesSet::new(antennas.axis.clone());
    set.units = zones.into_iter().collect();
    set.span = antennas.span;
    Ok(set)
}

/// Sum over all apps per local calendar day.
pub fn daily_volumes(series: &TrafficSeries, calendar: &LocalCalendar) -> Result<BTreeMap<NaiveDate, f64>> {
    let mut out = BTreeMap::new();
    for (&t, v) in &series.hours {
        let d = calendar.local_date(t)?;
        *out.entry(d).or_insert(0.0) += v.iter().sum::<f64>();
    }
    Ok(out)
}

/// Local days fully inside the hour span `[start, end]`.
pub fn complete_days(span: (i64, i64), calendar: &LocalCalendar) -> Result<BTreeSet<NaiveDate>> {
    let (start, end) = span;
    let mut out = BTreeSet::new();
    let mut d = calendar.local_date(start)?;
    let last = calendar.local_date(end)?;
    while d <= last {
        let first = calendar.first_epoch_of(d)?;
        let next = d.succ_opt().ok_or_else(|| Error::invalid("date overflow"))?;
        let last_hour = calendar.first_epoch_of(next)? - 3600;
        let starts_clean = first >= start && first - 3600 >= calendar.start() && calendar.local_date(first - 3600)? != d;
        if starts_clean && last_hour <= end {
            out.insert(d);
        }
        d = next;
    }
    Ok(out)
}

/// Restricts a daily map to `days`, with zero for days that carried no
/// traffic.
pub fn restrict_days(daily: &BTreeMap<NaiveDate, f64>, days: &BTreeSet<NaiveDate>) -> BTreeMap<NaiveDate, f64> {
    days.iter().map(|d| (*d, daily.get(d).copied().unwrap_or(0.0))).collect()
}

/// Median weekday daily volume over median weekend daily volume.
pub fn wd_we_ratio(daily: &BTreeMap<NaiveDate, f64>, calendar: &LocalCalendar) -> Result<f64> {
    let pick = |w: DayWindow| -> Vec<f64> {
        daily
            .iter()
            .filter(|(d, _)| calendar.in_window(**d, w))
            .map(|(_, &v)| v)
            .collect()
    };
    let wd = median(&pick(DayWindow::Weekday)).ok_or_else(|| Error::undefined("no weekday in the daily series"))?;
    let we = median(&pick(DayWindow::Weekend)).ok_or_else(|| Error::undefined("no weekend day in the daily series"))?;
    if we <= 0.0 {
        return Err(Error::undefined("median weekend volume is zero"));
    }
    Ok(wd / we)
}

/// Min-max normalization of zone totals to [0, 1]; all-equal totals map
/// to 0.5.
pub fn traffic_score(totals: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    if totals.len() < 2 {
        return Err(Error::invalid("traffic score needs at least two zones"));
    }
    let lo = totals.values().copied().fold(f64::INFINITY, f64::min);
    let hi = totals.values().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(totals
        .iter()
        .map(|(z, &v)| (z.clone(), if hi > lo { (v - lo) / (hi - lo) } else { 0.5 }))
        .collect())
}
