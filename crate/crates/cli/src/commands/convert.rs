//! Antenna traffic to zone traffic, daily volumes and per-window network
//! totals. Only local days fully inside the study span are kept.

use parkbeam::analysis::ZoneStudy;
use parkbeam::calendar::DayWindow;
use parkbeam::ingest::{apply_eligibility, load_eligibility, EligibilityFilter, TrafficReader};
use parkbeam::metrics::windowed_matrix;
use parkbeam::stats::median;
use parkbeam::traffic::{daily_volumes, restrict_days, traffic_score, wd_we_ratio, AppAxis, SeriesSet};

use super::*;
use crate::config::{Input, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{fmt6_opt, fmt_bytes, record_outputs, ArtifactWriter};

fn day_class(cal: &LocalCalendar, d: chrono::NaiveDate) -> &'static str {
    if cal.in_window(d, DayWindow::Weekday) {
        "weekday"
    } else if cal.in_window(d, DayWindow::Weekend) {
        "weekend"
    } else {
        "excluded"
    }
}

pub fn run(run: &RunConfig) -> Result<()> {
    let weights = read_weights(run)?;
    let (catalog, catalog_path) = load_catalog_input(run)?;
    let (cal, cal_path) = load_calendar(run)?;
    let traffic_path = run.input(Input::Traffic)?;
    let eligibility_path = run.optional_input(Input::Eligibility)?;
    let eligibility = eligibility_path.as_deref().map(load_eligibility).transpose()?;
    let min_users = run.config.eligibility.min_users;
    let filter = EligibilityFilter::new(eligibility.as_ref(), min_users, &cal);

    let mut reader = TrafficReader::open(&traffic_path)?;
    let (antennas, build) = SeriesSet::from_records(AppAxis::from_catalog(&catalog), apply_eligibility(reader.by_ref(), &filter));
    let load = reader.finish()?;
    let removed = load.accepted - build.records;
    if build.unknown_app_records > 0 {
        log::warn!("{} traffic rows name apps outside the catalog; skipped", build.unknown_app_records);
    }
    log::info!(
        "convert: {} rows, {} accepted, {} malformed, {} on ineligible antenna-days",
        load.rows,
        load.accepted,
        load.malformed.len(),
        removed
    );

    let study = ZoneStudy::build(&antennas, &weights, &cal)?;
    if study.days.is_empty() {
        return Err(CliError::config("traffic span covers no complete local day"));
    }
    let keep_day = |t: i64| -> Result<bool> { Ok(study.days.contains(&cal.local_date(t)?)) };

    let mut zt = ArtifactWriter::create(run, ZONE_TRAFFIC, &ZONE_TRAFFIC_COLUMNS)?;
    let apps = study.zones.axis().names().to_vec();
    for (zone, series) in study.zones.units() {
        for (t, v) in series.hours() {
            if !keep_day(t)? {
                continue;
            }
            for (app, x) in apps.iter().zip(v) {
                if *x > 0.0 {
                    zt.row([zone, &t.to_string(), app, &fmt_bytes(*x)])?;
                }
            }
        }
    }

    let daily = study.daily(&cal)?;
    let mut zd = ArtifactWriter::create(run, ZONE_DAILY, &ZONE_DAILY_COLUMNS)?;
    let mut summary = ArtifactWriter::create(run, ZONE_SUMMARY, &ZONE_SUMMARY_COLUMNS)?;
    let totals: BTreeMap<String, f64> = daily.iter().map(|(z, d)| (z.clone(), d.values().sum())).collect();
    let scores = if totals.len() >= 2 {
        traffic_score(&totals)?
    } else {
        log::warn!("fewer than two zones; traffic scores left empty");
        BTreeMap::new()
    };
    for (zone, days) in &daily {
        for (d, v) in days {
            zd.row([zone.as_str(), &d.to_string(), day_class(&cal, *d), &fmt_bytes(*v)])?;
        }
        let class = |w: DayWindow| -> Vec<f64> {
            days.iter().filter(|(d, _)| cal.in_window(**d, w)).map(|(_, v)| *v).collect()
        };
        let (wd, we) = (class(DayWindow::Weekday), class(DayWindow::Weekend));
        let ratio = match wd_we_ratio(days, &cal) {
            Ok(r) => Some(r),
            Err(e) if e.is_validation() => {
                log::warn!("zone {zone}: {e}");
                None
            }
            Err(e) => return Err(e.into()),
        };
        summary.row([
            zone.clone(),
            weights.get(zone).map_or(0, Vec::len).to_string(),
            fmt_bytes(totals[zone]),
            fmt6_opt(scores.get(zone).copied()),
            fmt6_opt(median(&wd)),
            fmt6_opt(median(&we)),
            fmt6_opt(ratio),
            wd.len().to_string(),
            we.len().to_string(),
        ])?;
    }

    let mut city = ArtifactWriter::create(run, CITY_DAILY, &CITY_DAILY_COLUMNS)?;
    let mut city_daily: BTreeMap<chrono::NaiveDate, f64> = BTreeMap::new();
    for (_, s) in antennas.units() {
        for (d, v) in daily_volumes(s, &cal)? {
            *city_daily.entry(d).or_default() += v;
        }
    }
    for (d, v) in restrict_days(&city_daily, &study.days) {
        city.row([d.to_string(), day_class(&cal, d).to_string(), fmt_bytes(v)])?;
    }

    let mut at = ArtifactWriter::create(run, ANTENNA_TOTALS, &ANTENNA_TOTALS_COLUMNS)?;
    for w in DayWindow::ALL {
        let m = match windowed_matrix(&antennas, w, &cal, Some(&study.days)) {
            Ok(m) => m,
            Err(e) if e.is_validation() => {
                log::warn!("no network traffic in the {} window", w.as_str());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        for (u, unit) in m.units().iter().enumerate() {
            for (a, app) in m.cols().iter().enumerate() {
                at.row([unit.as_str(), w.as_str(), app, &fmt_bytes(m.get(u, a))])?;
            }
        }
    }

    let mut ingest = ArtifactWriter::create(run, INGEST_REPORT, &INGEST_REPORT_COLUMNS)?;
    let ineligible = eligibility.as_ref().map_or(0, |e| e.ineligible(min_users).len());
    for (item, n) in [
        ("rows", load.rows),
        ("accepted", load.accepted),
        ("malformed", load.malformed.len() as u64),
        ("ineligible_antenna_days", ineligible as u64),
        ("eligibility_removed", removed),
        ("unknown_app", build.unknown_app_records),
        ("complete_days", study.days.len() as u64),
    ] {
        ingest.row([item.to_string(), n.to_string()])?;
    }
    log::info!("convert: {} zones over {} complete days", daily.len(), study.days.len());

    let outputs = [
        zt.finish()?,
        zd.finish()?,
        summary.finish()?,
        city.finish()?,
        at.finish()?,
        ingest.finish()?,
    ];
    let mut inputs: Vec<(&str, &std::path::Path)> = vec![("traffic", &traffic_path), ("catalog", &catalog_path)];
    if let Some(p) = &eligibility_path {
        inputs.push(("eligibility", p));
    }
    if let Some(p) = &cal_path {
        inputs.push(("calendar", p));
    }
    record_outputs(run, "convert", &inputs, &outputs)
}
