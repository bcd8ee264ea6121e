//! Antenna selection per zone and the base-station comparison.

use parkbeam::coverage::{compare_attribution, run_selection, AttributionSummary, Verdict};
use parkbeam::ingest::{load_sites, load_zones};
use parkbeam::model::antenna_polygons;
use parkbeam::synth::study_area;

use super::*;
use crate::config::{Input, RunConfig};
use crate::error::Result;
use crate::output::{fmt6, fmt6_opt, record_outputs, ArtifactWriter};

pub fn run(run: &RunConfig) -> Result<()> {
    let geometry = run.config.geometry()?;
    let origin = geometry.origin_point();
    let sites_path = run.input(Input::Sites)?;
    let zones_path = run.input(Input::Zones)?;
    let sites = load_sites(&sites_path, origin)?;
    let zones = load_zones(&zones_path, origin)?;
    let bbox = study_area(geometry.bbox, origin)?;
    let mut antennas = antenna_polygons(&sites, &bbox)?;
    antennas.sort_by(|a, b| a.antenna_id.cmp(&b.antenna_id));
    let t = run.config.selection;
    let reports = run_selection(&zones, &antennas, &t)?;

    let mut report = ArtifactWriter::create(run, COVERAGE_REPORT, &COVERAGE_REPORT_COLUMNS)?;
    let mut weights = ArtifactWriter::create(run, COVERAGE_WEIGHTS, &COVERAGE_WEIGHTS_COLUMNS)?;
    let names: BTreeMap<&str, &str> = zones.iter().map(|z| (z.zone_id.as_str(), z.name.as_str())).collect();
    for r in &reports {
        report.row([
            r.zone_id.clone(),
            names[r.zone_id.as_str()].to_string(),
            fmt6(r.zone_area),
            r.selected.len().to_string(),
            fmt6_opt(r.precision),
            fmt6_opt(r.illumination),
            fmt6_opt(r.quality),
            r.verdict.as_str().to_string(),
        ])?;
        if r.verdict == Verdict::Selected {
            for s in &r.selected {
                weights.row([
                    r.zone_id.clone(),
                    s.antenna_id.clone(),
                    fmt6(s.ratio),
                    fmt6(s.overlap_area),
                ])?;
            }
        }
    }
    let counts = Verdict::ALL.map(|v| reports.iter().filter(|r| r.verdict == v).count());
    log::info!(
        "select: {} zones, verdicts {}",
        reports.len(),
        Verdict::ALL
            .iter()
            .zip(counts)
            .map(|(v, n)| format!("{}={n}", v.as_str()))
            .collect::<Vec<_>>()
            .join(" ")
    );

    let cmp = compare_attribution(&zones, &sites, &bbox, &t)?;
    let mut attribution = ArtifactWriter::create(run, ATTRIBUTION, &ATTRIBUTION_COLUMNS)?;
    let summary_row = |s: &AttributionSummary, gain: Option<f64>| {
        [
            s.method.as_str().to_string(),
            s.reports.len().to_string(),
            s.n_selected().to_string(),
            fmt6_opt(s.median_precision),
            fmt6_opt(s.median_illumination),
            fmt6_opt(s.median_quality),
            fmt6_opt(gain),
        ]
    };
    attribution.row(summary_row(&cmp.base_station, None))?;
    attribution.row(summary_row(&cmp.antenna, cmp.quality_gain()))?;

    let outputs = [report.finish()?, weights.finish()?, attribution.finish()?];
    record_outputs(run, "select", &[("sites", &sites_path), ("zones", &zones_path)], &outputs)?;
    Ok(())
}
