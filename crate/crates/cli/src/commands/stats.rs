//! Category RSCA tests of zones and clusters against the rest of the city,
//! and Pearson correlations with socioeconomic indicators.

use parkbeam::analysis::Scope;
use parkbeam::calendar::DayWindow;
use parkbeam::geom::project;
use parkbeam::ingest::{fill_distances, load_socio, load_zones, SocioRecord};
use parkbeam::metrics::RscaMatrix;
use parkbeam::stats::{gated_ttest_centered, pearson, significance_stars, TestReport};

use super::rsca::read_rsca;
use super::*;
use crate::config::{Input, RunConfig};
use crate::error::Result;
use crate::output::{fmt6, record_outputs, ArtifactWriter};

pub const ZONES_VS_CITY: &str = "zones_vs_city";
pub const CLUSTER_VS_CITY: &str = "cluster_vs_city";
pub const CORRELATION: &str = "correlation";
pub const ALL_ZONES: &str = "all";

struct Report {
    out: ArtifactWriter,
}

impl Report {
    fn test(&mut self, scope: &str, group: &str, category: &str, x: &[f64], y: &[f64], t: &TestReport) -> Result<()> {
        self.out.row([
            scope,
            group,
            category,
            &t.gate.map(|g| fmt6(g.levene_p)).unwrap_or_default(),
            t.test.as_str(),
            &fmt6(t.statistic),
            &fmt6(t.df),
            &fmt6(t.p_value),
            t.stars(),
            &x.len().to_string(),
            &y.len().to_string(),
        ])
    }

    fn correlation(&mut self, group: &str, pair: &str, x: &[f64], y: &[f64]) -> Result<()> {
        match pearson(x, y) {
            Ok(c) => self.out.row([
                CORRELATION,
                group,
                pair,
                "",
                "pearson",
                &fmt6(c.rho),
                &(c.n.saturating_sub(2)).to_string(),
                &fmt6(c.p_value),
                significance_stars(c.p_value),
                &c.n.to_string(),
                "",
            ]),
            Err(e) if e.is_validation() => {
                log::warn!("correlation {pair} ({group}) skipped: {e}");
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }
}

fn column(m: &RscaMatrix, a: usize, units: &[&str]) -> Result<Vec<f64>> {
    Ok(m.column_for(a, units)?)
}

fn compare(
    report: &mut Report,
    run: &RunConfig,
    scope: &str,
    group: &str,
    zones: &RscaMatrix,
    members: &[&str],
    city: &RscaMatrix,
) -> Result<()> {
    let city_units: Vec<&str> = city.units().iter().map(String::as_str).collect();
    let s = &run.config.stats;
    for (a, cat) in zones.cols().iter().enumerate() {
        let Some(ca) = city.col_index(cat) else {
            continue;
        };
        let x = column(zones, a, members)?;
        let y = column(city, ca, &city_units)?;
        match gated_ttest_centered(&x, &y, s.gate_alpha, s.levene_center.center()) {
            Ok(t) => report.test(scope, group, cat, &x, &y, &t)?,
            Err(e) if e.is_validation() => log::warn!("{scope} {group} {cat}: {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn load_indicators(run: &RunConfig) -> Result<Option<Vec<SocioRecord>>> {
    let Some(path) = run.optional_input(Input::Socio)? else {
        log::warn!("no socioeconomic indicators; correlations skipped");
        return Ok(None);
    };
    let mut records = load_socio(&path)?;
    if records.iter().any(|r| r.dist_center.is_none()) {
        let geometry = run.config.geometry()?;
        let origin = geometry.origin_point();
        let zones = load_zones(run.input(Input::Zones)?, origin)?;
        let [lon, lat] = geometry.center.unwrap_or(geometry.origin);
        fill_distances(&mut records, &zones, project(lon, lat, origin)?);
    }
    Ok(Some(records))
}

pub fn run(run: &RunConfig) -> Result<()> {
    let zones = read_rsca(run, "zone", Scope::Category, DayWindow::All)?;
    let city = read_rsca(run, "antenna", Scope::Category, DayWindow::All)?;
    let labels = read_clusters(run)?;
    let mut report = Report {
        out: ArtifactWriter::create(run, STATS_REPORT, &STATS_COLUMNS)?,
    };

    let all: Vec<&str> = zones.units().iter().map(String::as_str).collect();
    compare(&mut report, run, ZONES_VS_CITY, ALL_ZONES, &zones, &all, &city)?;
    let groups = cluster_groups(&labels);
    for (c, members) in &groups {
        let m: Vec<&str> = all.iter().copied().filter(|z| members.contains(*z)).collect();
        compare(&mut report, run, CLUSTER_VS_CITY, &c.to_string(), &zones, &m, &city)?;
    }

    let mut inputs: Vec<(&str, std::path::PathBuf)> = Vec::new();
    if let Some(socio) = load_indicators(run)? {
        inputs.push(("socio", run.input_path(Input::Socio)));
        let ratios = read_ratios(run)?;
        let totals = read_zone_totals(run)?;
        let by_zone: BTreeMap<&str, &SocioRecord> = socio.iter().map(|r| (r.zone_id.as_str(), r)).collect();
        let indicators: [(&str, fn(&SocioRecord) -> Option<f64>); 3] = [
            ("dist_center", |r| r.dist_center),
            ("median_income", |r| Some(r.median_income)),
            ("gini", |r| Some(r.gini)),
        ];
        let targets: [(&str, &BTreeMap<String, f64>); 2] = [("wd_we_ratio", &ratios), ("total_bytes", &totals)];
        for (iname, ind) in indicators {
            for (tname, target) in targets {
                let (x, y): (Vec<f64>, Vec<f64>) = target
                    .iter()
                    .filter_map(|(z, v)| Some((ind(by_zone.get(z.as_str())?)?, *v)))
                    .unzip();
                report.correlation(ALL_ZONES, &format!("{iname}~{tname}"), &x, &y)?;
            }
            for (c, members) in &groups {
                let m: Vec<&str> = all
                    .iter()
                    .copied()
                    .filter(|z| members.contains(*z) && by_zone.get(z).and_then(|r| ind(r)).is_some())
                    .collect();
                let x: Vec<f64> = m.iter().filter_map(|z| ind(by_zone[z])).collect();
                for (a, cat) in zones.cols().iter().enumerate() {
                    let y = column(&zones, a, &m)?;
                    report.correlation(&c.to_string(), &format!("{iname}~{cat}"), &x, &y)?;
                }
            }
        }
    }

    let outputs = [report.out.finish()?];
    let inputs: Vec<(&str, &std::path::Path)> = inputs.iter().map(|(r, p)| (*r, p.as_path())).collect();
    record_outputs(run, "stats", &inputs, &outputs)
}
