//! One module per subcommand. Every command reads its inputs and the
//! artifacts of earlier stages, writes its own artifacts and records them
//! in the manifest; `pipeline` runs them in order.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use parkbeam::calendar::LocalCalendar;
use parkbeam::ingest::{load_catalog, AppCatalog};

use crate::config::{Input, RunConfig};
use crate::error::Result;
use crate::output::{parse_field, read_artifact};

pub mod cluster;
pub mod convert;
pub mod pipeline;
pub mod rsca;
pub mod select;
pub mod stats;
pub mod synth;
pub mod tags;

pub const COVERAGE_REPORT: &str = "coverage_report.csv";
pub const COVERAGE_REPORT_COLUMNS: [&str; 8] = [
    "zone_id",
    "name",
    "area_m2",
    "n_selected",
    "precision",
    "illumination",
    "quality",
    "verdict",
];
pub const COVERAGE_WEIGHTS: &str = "coverage_weights.csv";
pub const COVERAGE_WEIGHTS_COLUMNS: [&str; 4] = ["zone_id", "antenna_id", "ratio", "overlap_m2"];
pub const ATTRIBUTION: &str = "attribution_comparison.csv";
pub const ATTRIBUTION_COLUMNS: [&str; 7] = [
    "method",
    "n_zones",
    "n_selected",
    "median_precision",
    "median_illumination",
    "median_quality",
    "quality_gain",
];

pub const ZONE_TRAFFIC: &str = "zone_traffic.csv";
pub const ZONE_TRAFFIC_COLUMNS: [&str; 4] = ["zone_id", "timestamp", "app_id", "bytes"];
pub const ZONE_DAILY: &str = "zone_daily.csv";
pub const ZONE_DAILY_COLUMNS: [&str; 4] = ["zone_id", "date", "day_class", "bytes"];
pub const CITY_DAILY: &str = "city_daily.csv";
pub const CITY_DAILY_COLUMNS: [&str; 3] = ["date", "day_class", "bytes"];
pub const ANTENNA_TOTALS: &str = "antenna_totals.csv";
pub const ANTENNA_TOTALS_COLUMNS: [&str; 4] = ["antenna_id", "window", "app_id", "bytes"];
pub const ZONE_SUMMARY: &str = "zone_summary.csv";
pub const ZONE_SUMMARY_COLUMNS: [&str; 9] = [
    "zone_id",
    "n_antennas",
    "total_bytes",
    "traffic_score",
    "weekday_median",
    "weekend_median",
    "wd_we_ratio",
    "n_weekdays",
    "n_weekend_days",
];
pub const INGEST_REPORT: &str = "ingest_report.csv";
pub const INGEST_REPORT_COLUMNS: [&str; 2] = ["item", "count"];

pub const RSCA: &str = "rsca.csv";
pub const RSCA_COLUMNS: [&str; 8] = ["unit_id", "unit_kind", "scope", "window", "name", "rca", "rsca", "zero_traffic"];
pub const RSCA_PROFILES: &str = "rsca_profiles.csv";
pub const PROFILE_COLUMNS: [&str; 7] = ["group", "scope", "window", "name", "mean", "half_width", "n"];

pub const CLUSTERS: &str = "clusters.csv";
pub const CLUSTERS_COLUMNS: [&str; 2] = ["zone_id", "cluster"];
pub const SILHOUETTE: &str = "silhouette_by_k.csv";
pub const SILHOUETTE_COLUMNS: [&str; 5] = ["k", "silhouette", "eigengap", "inertia", "chosen"];
pub const CLUSTER_PROFILES: &str = "cluster_profiles.csv";

pub const STATS_REPORT: &str = "stats_report.csv";
pub const STATS_COLUMNS: [&str; 11] = [
    "scope",
    "group",
    "category",
    "levene_p",
    "test",
    "statistic",
    "df",
    "p",
    "stars",
    "n",
    "n_ref",
];

pub const TAG_IMPORTANCE: &str = "tag_importance.csv";
pub const TAG_IMPORTANCE_COLUMNS: [&str; 6] = ["zone_id", "tag", "count", "p_tag", "expected", "r"];
pub const CLUSTER_TAGS: &str = "cluster_tags.csv";
pub const CLUSTER_TAGS_COLUMNS: [&str; 4] = ["cluster", "rank", "tag", "mean_r"];
pub const TAG_CLEANING: &str = "tag_cleaning.csv";
pub const TAG_CLEANING_COLUMNS: [&str; 3] = ["tag", "reason", "pass"];

/// Label used for rest-of-city groups in profiles and tests.
pub const CITY_GROUP: &str = "city";

pub(crate) fn load_calendar(run: &RunConfig) -> Result<(LocalCalendar, Option<PathBuf>)> {
    match run.optional_input(Input::Calendar)? {
        Some(p) => Ok((LocalCalendar::load(&p)?, Some(p))),
        None => {
            log::warn!("no calendar file; using the built-in Paris 2023 offset rules");
            Ok((LocalCalendar::paris_2023(), None))
        }
    }
}

pub(crate) fn load_catalog_input(run: &RunConfig) -> Result<(AppCatalog, PathBuf)> {
    let p = run.input(Input::Catalog)?;
    Ok((load_catalog(&p)?, p))
}

pub(crate) type Weights = BTreeMap<String, Vec<(String, f64)>>;

/// Selection weights of the zones that passed every stage.
pub(crate) fn read_weights(run: &RunConfig) -> Result<Weights> {
    let (path, mut rdr) = read_artifact(run, COVERAGE_WEIGHTS, "select", &COVERAGE_WEIGHTS_COLUMNS)?;
    let mut out: Weights = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let ratio: f64 = parse_field(&path, line, "ratio", &rec[2])?;
        out.entry(rec[0].to_string()).or_default().push((rec[1].to_string(), ratio));
    }
    Ok(out)
}

pub(crate) fn read_clusters(run: &RunConfig) -> Result<BTreeMap<String, usize>> {
    let (path, mut rdr) = read_artifact(run, CLUSTERS, "cluster", &CLUSTERS_COLUMNS)?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        out.insert(rec[0].to_string(), parse_field(&path, i as u64 + 2, "cluster", &rec[1])?);
    }
    Ok(out)
}

/// Rows of `zone_summary.csv` that carry a weekday/weekend ratio.
pub(crate) fn read_ratios(run: &RunConfig) -> Result<BTreeMap<String, f64>> {
    let (path, mut rdr) = read_artifact(run, ZONE_SUMMARY, "convert", &ZONE_SUMMARY_COLUMNS)?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if !rec[6].is_empty() {
            out.insert(rec[0].to_string(), parse_field(&path, i as u64 + 2, "wd_we_ratio", &rec[6])?);
        }
    }
    Ok(out)
}

/// Total bytes per zone from `zone_summary.csv`.
pub(crate) fn read_zone_totals(run: &RunConfig) -> Result<BTreeMap<String, f64>> {
    let (path, mut rdr) = read_artifact(run, ZONE_SUMMARY, "convert", &ZONE_SUMMARY_COLUMNS)?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        out.insert(rec[0].to_string(), parse_field(&path, i as u64 + 2, "total_bytes", &rec[2])?);
    }
    Ok(out)
}

pub(crate) fn cluster_groups(labels: &BTreeMap<String, usize>) -> BTreeMap<usize, BTreeSet<String>> {
    let mut g: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (z, c) in labels {
        g.entry(*c).or_default().insert(z.clone());
    }
    g
}
