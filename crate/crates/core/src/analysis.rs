//! In-memory composition of the analysis stages: zone series, daily
//! volumes, weekday/weekend ratios, RSCA against the network and zone
//! clustering. File handling lives with the command line front end.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::calendar::{DayWindow, LocalCalendar};
use crate::cluster::{build_features, select_k, spectral_cluster, ClusterResult, FeatureMatrix, KScore};
use crate::error::{Error, Result};
use crate::ingest::AppCatalog;
use crate::metrics::{rca_with_reference, windowed_matrix, RcaMatrix, Reference, RscaMatrix, UnitAppMatrix};
use crate::traffic::{complete_days, daily_volumes, restrict_days, wd_we_ratio, zone_traffic, SeriesSet};

/// Aggregation level of an RSCA matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    App,
    Category,
}

impl Scope {
    pub const ALL: [Scope; 2] = [Scope::App, Scope::Category];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scope::App => "app",
            Scope::Category => "category",
        }
    }
}

/// Zone series derived from antenna series, with the local days that are
/// fully covered by the study span.
#[derive(Debug, Clone)]
pub struct ZoneStudy {
    pub zones: SeriesSet,
    pub days: BTreeSet<NaiveDate>,
}

impl ZoneStudy {
    pub fn build(
        antennas: &SeriesSet,
        weights: &BTreeMap<String, Vec<(String, f64)>>,
        calendar: &LocalCalendar,
    ) -> Result<Self> {
        let span = antennas
            .span()
            .ok_or_else(|| Error::invalid("antenna traffic is empty"))?;
        let zones = zone_traffic(antennas, weights)?;
        let days = complete_days(span, calendar)?;
        Ok(ZoneStudy { zones, days })
    }

    /// Daily volumes of every zone over the complete days, zero-filled.
    pub fn daily(&self, calendar: &LocalCalendar) -> Result<BTreeMap<String, BTreeMap<NaiveDate, f64>>> {
        let units: Vec<(&str, _)> = self.zones.units().collect();
        units
            .par_iter()
            .map(|(z, s)| Ok((z.to_string(), restrict_days(&daily_volumes(s, calendar)?, &self.days))))
            .collect()
    }

    /// Weekday/weekend ratio per zone; zones where it is undefined are
    /// left out with a warning.
    pub fn ratios(&self, calendar: &LocalCalendar) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        for (z, daily) in self.daily(calendar)? {
            match wd_we_ratio(&daily, calendar) {
                Ok(r) => {
                    out.insert(z, r);
                }
                Err(e) if e.is_validation() => log::warn!("zone {z}: {e}"),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}

/// RSCA of the zones and of the antennas outside every zone, both against
/// the network reference.
#[derive(Debug, Clone)]
pub struct RscaStudy {
    pub zones: RcaMatrix,
    /// Antennas selected by no zone, one row each.
    pub city: RcaMatrix,
    pub network: UnitAppMatrix,
}

fn at_scope(m: UnitAppMatrix, scope: Scope, catalog: &AppCatalog) -> Result<UnitAppMatrix> {
    match scope {
        Scope::App => Ok(m),
        Scope::Category => m.category_matrix(catalog),
    }
}

/// Computes zone and rest-of-city RSCA in `window` over the complete
/// days. The reference shares always come from the whole network in that
/// window.
pub fn rsca_study(
    antennas: &SeriesSet,
    study: &ZoneStudy,
    weights: &BTreeMap<String, Vec<(String, f64)>>,
    scope: Scope,
    window: DayWindow,
    calendar: &LocalCalendar,
    catalog: &AppCatalog,
) -> Result<RscaStudy> {
    let network = windowed_matrix(antennas, window, calendar, Some(&study.days))?;
    let zones = windowed_matrix(&study.zones, window, calendar, Some(&study.days))?;
    let used: BTreeSet<&str> = weights.values().flatten().map(|(a, _)| a.as_str()).collect();
    rsca_against_network(&zones, &network, &used, scope, catalog)
}

/// RSCA of app-level zone volumes and of the network antennas outside
/// `used`, against the column shares of the whole `network` matrix.
pub fn rsca_against_network(
    zones: &UnitAppMatrix,
    network: &UnitAppMatrix,
    used: &BTreeSet<&str>,
    scope: Scope,
    catalog: &AppCatalog,
) -> Result<RscaStudy> {
    let network = at_scope(network.clone(), scope, catalog)?;
    let reference = Reference::of(&network)?;
    let zone_m = at_scope(zones.clone(), scope, catalog)?;
    let rest: Vec<&str> = network
        .units()
        .iter()
        .map(String::as_str)
        .filter(|a| !used.contains(a))
        .collect();
    let city_m = network.select_units(&rest)?;
    Ok(RscaStudy {
        zones: rca_with_reference(&zone_m, &reference)?,
        city: rca_with_reference(&city_m, &reference)?,
        network,
    })
}

/// Clustering outcome with the k scan that chose it.
#[derive(Debug, Clone)]
pub struct ZoneClustering {
    pub features: FeatureMatrix,
    pub result: ClusterResult,
    pub scan: Vec<KScore>,
}

impl ZoneClustering {
    pub fn labels(&self) -> BTreeMap<String, usize> {
        self.features
            .zones()
            .iter()
            .cloned()
            .zip(self.result.labels.iter().copied())
            .collect()
    }
}

/// Clusters zones on per-app RSCA plus the weekday/weekend ratio. A fixed
/// `k` skips the scan; otherwise the silhouette picks k in `k_range`.
pub fn cluster_zones(
    rsca: &RscaMatrix,
    ratios: &BTreeMap<String, f64>,
    k: Option<usize>,
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<ZoneClustering> {
    let features = build_features(rsca, ratios)?;
    match k {
        Some(k) => {
            let result = spectral_cluster(&features, k, seed)?;
            Ok(ZoneClustering {
                features,
                result,
                scan: Vec::new(),
            })
        }
        None => {
            let (best, scan, results) = select_k(&features, k_range, seed)?;
            let result = results
                .into_iter()
                .find(|r| r.k == best)
                .ok_or_else(|| Error::Numerical(format!("no clustering stored for k = {best}")))?;
            Ok(ZoneClustering { features, result, scan })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::{AppAxis, TrafficSeries};

    #[test]
    fn study_uses_complete_days_only() {
        let cal = LocalCalendar::paris_2023();
        let start = cal.first_epoch_of(NaiveDate::from_ymd_opt(2023, 3, 6).unwrap()).unwrap();
        let axis = AppAxis::new(vec!["x".into()]).unwrap();
        let mut set = SeriesSet::new(axis);
        let mut s = TrafficSeries::default();
        // 7 full local days plus a dangling half day
        for h in 0..(7 * 24 + 12) {
            s.add(start + 3600 * h, 0, 1, 1.0);
        }
        set.insert("A1".into(), s);
        set.set_span(Some((start, start + 3600 * (7 * 24 + 11))));
        let w = BTreeMap::from([("Z1".to_string(), vec![("A1".to_string(), 1.0)])]);
        let study = ZoneStudy::build(&set, &w, &cal).unwrap();
        assert_eq!(study.days.len(), 7);
        let r = study.ratios(&cal).unwrap();
        assert_eq!(r["Z1"], 1.0);
    }
}
