//! RCA and RSCA of zones, rest-of-city antennas and the rest-of-city
//! aggregate, per scope and day window, against the network reference.

use parkbeam::analysis::{rsca_against_network, Scope};
use parkbeam::calendar::DayWindow;
use parkbeam::metrics::{group_profile, rca_with_reference, RcaMatrix, Reference, UnitAppMatrix};
use parkbeam::traffic::{AppAxis, SeriesSet, TrafficSeries};

use super::*;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{fmt6, fmt6_opt, parse_field, read_artifact, record_outputs, ArtifactWriter};

pub const REST_OF_CITY: &str = "rest_of_city";

fn read_zone_series(run: &RunConfig, axis: &AppAxis) -> Result<SeriesSet> {
    let (path, mut rdr) = read_artifact(run, ZONE_TRAFFIC, "convert", &ZONE_TRAFFIC_COLUMNS)?;
    let n = axis.len();
    let mut units: BTreeMap<String, TrafficSeries> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let t: i64 = parse_field(&path, line, "timestamp", &rec[1])?;
        let a = axis
            .position(&rec[2])
            .ok_or_else(|| CliError::artifact(&path, format!("line {line}: app {} not in the catalog", &rec[2])))?;
        let v: f64 = parse_field(&path, line, "bytes", &rec[3])?;
        units.entry(rec[0].to_string()).or_default().add(t, a, n, v);
    }
    let mut set = SeriesSet::new(axis.clone());
    for (z, s) in units {
        set.insert(z, s);
    }
    Ok(set)
}

fn read_network(run: &RunConfig, axis: &AppAxis) -> Result<BTreeMap<DayWindow, UnitAppMatrix>> {
    let (path, mut rdr) = read_artifact(run, ANTENNA_TOTALS, "convert", &ANTENNA_TOTALS_COLUMNS)?;
    let n = axis.len();
    let mut rows: BTreeMap<(DayWindow, String), Vec<f64>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let w = DayWindow::parse(&rec[1])?;
        let a = axis
            .position(&rec[2])
            .ok_or_else(|| CliError::artifact(&path, format!("line {line}: app {} not in the catalog", &rec[2])))?;
        let v: f64 = parse_field(&path, line, "bytes", &rec[3])?;
        rows.entry((w, rec[0].to_string())).or_insert_with(|| vec![0.0; n])[a] += v;
    }
    let mut out: BTreeMap<DayWindow, (Vec<String>, Vec<Vec<f64>>)> = BTreeMap::new();
    for ((w, unit), r) in rows {
        let e = out.entry(w).or_default();
        e.0.push(unit);
        e.1.push(r);
    }
    out.into_iter()
        .map(|(w, (units, rows))| Ok((w, UnitAppMatrix::from_rows(units, axis.names().to_vec(), &rows)?)))
        .collect()
}

struct Block<'a> {
    kind: &'static str,
    scope: Scope,
    window: DayWindow,
    m: &'a RcaMatrix,
}

fn write_block(w: &mut ArtifactWriter, b: &Block) -> Result<()> {
    for (u, unit) in b.m.units().iter().enumerate() {
        for (a, col) in b.m.cols().iter().enumerate() {
            let rca = b.m.get(u, a);
            w.row([
                unit.as_str(),
                b.kind,
                b.scope.as_str(),
                b.window.as_str(),
                col,
                &fmt6(rca),
                &fmt6(parkbeam::metrics::rsca(rca)),
                if b.m.is_zero_cell(u, a) { "true" } else { "false" },
            ])?;
        }
    }
    Ok(())
}

fn write_profile(w: &mut ArtifactWriter, group: &str, b: &Block) -> Result<()> {
    let rs = b.m.to_rsca();
    let units: Vec<&str> = rs.units().iter().map(String::as_str).collect();
    if units.is_empty() {
        return Ok(());
    }
    for e in group_profile(&rs, &units)? {
        w.row([
            group,
            b.scope.as_str(),
            b.window.as_str(),
            &e.name,
            &fmt6(e.mean),
            &fmt6_opt(e.half_width),
            &e.n.to_string(),
        ])?;
    }
    Ok(())
}

pub fn run(run: &RunConfig) -> Result<()> {
    let weights = read_weights(run)?;
    let (catalog, catalog_path) = load_catalog_input(run)?;
    let (cal, cal_path) = load_calendar(run)?;
    let axis = AppAxis::from_catalog(&catalog);
    let zones = read_zone_series(run, &axis)?;
    let network = read_network(run, &axis)?;
    let used: BTreeSet<&str> = weights.values().flatten().map(|(a, _)| a.as_str()).collect();

    let mut out = ArtifactWriter::create(run, RSCA, &RSCA_COLUMNS)?;
    let mut profiles = ArtifactWriter::create(run, RSCA_PROFILES, &PROFILE_COLUMNS)?;
    for window in DayWindow::ALL {
        let Some(net) = network.get(&window) else {
            log::warn!("no network totals for the {} window", window.as_str());
            continue;
        };
        let zone_m = match parkbeam::metrics::windowed_matrix(&zones, window, &cal, None) {
            Ok(m) => m,
            Err(e) if e.is_validation() => {
                log::warn!("{e}");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        for scope in Scope::ALL {
            let study = rsca_against_network(&zone_m, net, &used, scope, &catalog)?;
            let rest: Vec<&str> = study.city.units().iter().map(String::as_str).collect();
            let aggregate = if rest.is_empty() {
                None
            } else {
                let agg = study.network.sum_units(REST_OF_CITY, &rest)?;
                Some(rca_with_reference(&agg, &Reference::of(&study.network)?)?)
            };
            let blocks = [
                Block {
                    kind: "zone",
                    scope,
                    window,
                    m: &study.zones,
                },
                Block {
                    kind: "antenna",
                    scope,
                    window,
                    m: &study.city,
                },
            ];
            for b in &blocks {
                write_block(&mut out, b)?;
            }
            if let Some(agg) = &aggregate {
                write_block(
                    &mut out,
                    &Block {
                        kind: "aggregate",
                        scope,
                        window,
                        m: agg,
                    },
                )?;
            }
            write_profile(&mut profiles, "zones", &blocks[0])?;
            write_profile(&mut profiles, CITY_GROUP, &blocks[1])?;
        }
    }
    let outputs = [out.finish()?, profiles.finish()?];
    let mut inputs: Vec<(&str, &std::path::Path)> = vec![("catalog", &catalog_path)];
    if let Some(p) = &cal_path {
        inputs.push(("calendar", p));
    }
    record_outputs(run, "rsca", &inputs, &outputs)
}

/// RSCA values of one unit kind, scope and window from `rsca.csv`.
pub(crate) fn read_rsca(
    run: &RunConfig,
    kind: &str,
    scope: Scope,
    window: DayWindow,
) -> Result<parkbeam::metrics::RscaMatrix> {
    let (path, mut rdr) = read_artifact(run, RSCA, "rsca", &RSCA_COLUMNS)?;
    let mut units: Vec<String> = Vec::new();
    let mut cols: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if &rec[1] != kind || &rec[2] != scope.as_str() || &rec[3] != window.as_str() {
            continue;
        }
        let v: f64 = parse_field(&path, i as u64 + 2, "rsca", &rec[6])?;
        if units.last().map(String::as_str) != Some(&rec[0]) {
            units.push(rec[0].to_string());
        }
        if !cols.iter().any(|c| c == &rec[4]) {
            cols.push(rec[4].to_string());
        }
        cells.insert((rec[0].to_string(), rec[4].to_string()), v);
    }
    let mut values = Vec::with_capacity(units.len() * cols.len());
    for u in &units {
        for c in &cols {
            values.push(
                *cells
                    .get(&(u.clone(), c.clone()))
                    .ok_or_else(|| CliError::artifact(&path, format!("no {} value for {u}/{c}", scope.as_str())))?,
            );
        }
    }
    Ok(parkbeam::metrics::RscaMatrix::new(units, cols, values)?)
}
