//! Spectral clustering of the selected zones. The silhouette scan over the
//! configured k range always runs and is written out; a fixed k only
//! overrides which clustering is kept.

use parkbeam::analysis::Scope;
use parkbeam::calendar::DayWindow;
use parkbeam::cluster::{build_features, select_k, spectral_cluster, KScore};
use parkbeam::metrics::group_profile;

use super::rsca::read_rsca;
use super::*;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{fmt6, fmt6_opt, record_outputs, ArtifactWriter};

pub fn run(run: &RunConfig) -> Result<()> {
    let settings = run.config.cluster;
    let rsca = read_rsca(run, "zone", Scope::App, DayWindow::All)?;
    let ratios = read_ratios(run)?;
    let features = build_features(&rsca, &ratios)?;
    for z in &features.dropped {
        log::warn!("zone {z} has no weekday/weekend ratio; not clustered");
    }
    let seed = run.seed();

    let range = settings.k_min..=settings.k_max;
    let (scan, mut results): (Vec<KScore>, Vec<_>) = match select_k(&features, range, seed) {
        Ok((_, scan, results)) => (scan, results),
        Err(e) if e.is_validation() && settings.k.is_some() => {
            log::warn!("k scan skipped: {e}");
            (Vec::new(), Vec::new())
        }
        Err(e) => return Err(e.into()),
    };
    let best = scan
        .iter()
        .fold(None::<&KScore>, |b, s| match b {
            Some(b) if b.silhouette >= s.silhouette => Some(b),
            _ => Some(s),
        })
        .map(|s| s.k);
    let k = settings.k.or(best).ok_or_else(|| CliError::config("no k could be chosen"))?;
    let result = match results.iter().position(|r| r.k == k) {
        Some(i) => results.swap_remove(i),
        None => spectral_cluster(&features, k, seed)?,
    };
    if let (Some(fixed), Some(best)) = (settings.k, best) {
        if fixed != best {
            log::info!("cluster: k fixed at {fixed}; the silhouette scan prefers {best}");
        }
    }
    log::info!(
        "cluster: {} zones into k = {} (silhouette {:.3})",
        features.n(),
        k,
        result.silhouette
    );

    let mut clusters = ArtifactWriter::create(run, CLUSTERS, &CLUSTERS_COLUMNS)?;
    let labels: BTreeMap<String, usize> = features.zones().iter().cloned().zip(result.labels.iter().copied()).collect();
    for (z, c) in &labels {
        clusters.row([z.clone(), c.to_string()])?;
    }

    let mut sil = ArtifactWriter::create(run, SILHOUETTE, &SILHOUETTE_COLUMNS)?;
    for s in &scan {
        sil.row([
            s.k.to_string(),
            fmt6(s.silhouette),
            fmt6(s.eigengap),
            fmt6(s.inertia),
            (s.k == k).to_string(),
        ])?;
    }
    if !scan.iter().any(|s| s.k == k) {
        sil.row([
            k.to_string(),
            fmt6(result.silhouette),
            fmt6(result.eigengap),
            fmt6(result.inertia),
            "true".to_string(),
        ])?;
    }

    let mut profiles = ArtifactWriter::create(run, CLUSTER_PROFILES, &PROFILE_COLUMNS)?;
    for scope in Scope::ALL {
        for window in DayWindow::ALL {
            let zones = match read_rsca(run, "zone", scope, window) {
                Ok(m) if !m.units().is_empty() => m,
                Ok(_) => continue,
                Err(e) => return Err(e),
            };
            let mut groups: Vec<(String, Vec<&str>)> = cluster_groups(&labels)
                .into_iter()
                .map(|(c, members)| {
                    let units = zones
                        .units()
                        .iter()
                        .map(String::as_str)
                        .filter(|u| members.contains(*u))
                        .collect();
                    (c.to_string(), units)
                })
                .collect();
            let city = read_rsca(run, "antenna", scope, window)?;
            let city_units: Vec<&str> = city.units().iter().map(String::as_str).collect();
            groups.retain(|(_, u)| !u.is_empty());
            for (group, units) in &groups {
                write_profile(&mut profiles, group, scope, window, &zones, units)?;
            }
            if !city_units.is_empty() {
                write_profile(&mut profiles, CITY_GROUP, scope, window, &city, &city_units)?;
            }
        }
    }

    let outputs = [clusters.finish()?, sil.finish()?, profiles.finish()?];
    record_outputs(run, "cluster", &[], &outputs)
}

fn write_profile(
    w: &mut ArtifactWriter,
    group: &str,
    scope: Scope,
    window: DayWindow,
    m: &parkbeam::metrics::RscaMatrix,
    units: &[&str],
) -> Result<()> {
    for e in group_profile(m, units)? {
        w.row([
            group,
            scope.as_str(),
            window.as_str(),
            &e.name,
            &fmt6(e.mean),
            &fmt6_opt(e.half_width),
            &e.n.to_string(),
        ])?;
    }
    Ok(())
}
