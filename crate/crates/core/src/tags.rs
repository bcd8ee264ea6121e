//! Photo-tag relative importance.
//!
//! For a tag with global probability `p_tag` and a zone with `N` tag
//! occurrences, the expected count is `p_tag * N` and the relative
//! importance is `r = n / (p_tag * N)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};

/// Tag occurrence counts per zone. Every stored count is >= 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagTable {
    cells: BTreeMap<(String, String), u64>,
}

impl TagTable {
    /// Builds a table from `(zone_id, tag, count)` rows. Tags are
    /// lowercased; zero counts are skipped; repeated cells are rejected.
    pub fn from_counts(rows: impl IntoIterator<Item = (String, String, u64)>) -> Result<Self> {
        let mut cells = BTreeMap::new();
        for (zone, tag, count) in rows {
            let tag = tag.trim().to_lowercase();
            if zone.is_empty() || tag.is_empty() {
                return Err(Error::invalid("tag row with empty zone_id or tag"));
            }
            if count == 0 {
                continue;
            }
            if cells.insert((zone.clone(), tag.clone()), count).is_some() {
                return Err(Error::invalid(format!("duplicate tag row ({zone}, {tag})")));
            }
        }
        Ok(TagTable { cells })
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn count(&self, zone: &str, tag: &str) -> u64 {
        self.cells.get(&(zone.to_string(), tag.to_string())).copied().unwrap_or(0)
    }

    /// Cells in (zone, tag) order.
    pub fn cells(&self) -> impl Iterator<Item = (&(String, String), u64)> {
        self.cells.iter().map(|(k, &v)| (k, v))
    }

    pub fn zones(&self) -> BTreeSet<&str> {
        self.cells.keys().map(|(z, _)| z.as_str()).collect()
    }

    pub fn tags(&self) -> BTreeSet<&str> {
        self.cells.keys().map(|(_, t)| t.as_str()).collect()
    }

    pub fn total(&self) -> u64 {
        self.cells.values().sum()
    }

    pub fn tag_totals(&self) -> BTreeMap<&str, u64> {
        let mut out = BTreeMap::new();
        for ((_, t), &c) in &self.cells {
            *out.entry(t.as_str()).or_insert(0) += c;
        }
        out
    }

    pub fn zone_totals(&self) -> BTreeMap<&str, u64> {
        let mut out = BTreeMap::new();
        for ((z, _), &c) in &self.cells {
            *out.entry(z.as_str()).or_insert(0) += c;
        }
        out
    }

    /// Copy without the tags for which `drop` returns true.
    pub fn without_tags(&self, mut drop: impl FnMut(&str) -> bool) -> TagTable {
        TagTable {
            cells: self
                .cells
                .iter()
                .filter(|((_, t), _)| !drop(t))
                .map(|(k, &v)| (k.clone(), v))
                .collect(),
        }
    }
}

/// Share of all tag occurrences carried by each tag. Sums to 1.
pub fn tag_probability(table: &TagTable) -> BTreeMap<String, f64> {
    let total = table.total() as f64;
    table
        .tag_totals()
        .into_iter()
        .map(|(t, c)| (t.to_string(), c as f64 / total))
        .collect()
}

pub fn expected_count(p_tag: f64, zone_total: u64) -> f64 {
    p_tag * zone_total as f64
}

/// r for every observed (zone, tag) cell.
pub fn relative_importance(table: &TagTable) -> BTreeMap<(String, String), f64> {
    let p = tag_probability(table);
    let zone_totals = table.zone_totals();
    table
        .cells()
        .map(|((z, t), n)| {
            let expected = expected_count(p[t.as_str()], zone_totals[z.as_str()]);
            ((z.clone(), t.clone()), n as f64 / expected)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleanReport {
    pub removed_listed: BTreeSet<String>,
    /// Tags removed by the single-zone rule, one set per pass.
    pub removed_single_zone: Vec<BTreeSet<String>>,
    /// Passes of the single-zone rule, counting the final one that removed
    /// nothing.
    pub iterations: usize,
}

const MAX_CLEAN_PASSES: usize = 100;

/// Removes listed tags (stopwords, configured irrelevant words), then
/// repeatedly removes tags whose r exceeds 1 in exactly one zone, with r
/// recomputed after each pass, until nothing changes.
pub fn clean_tags(
    table: &TagTable,
    stopwords: &BTreeSet<String>,
    irrelevant: &BTreeSet<String>,
) -> Result<(TagTable, CleanReport)> {
    let mut removed_listed = BTreeSet::new();
    let mut current = table.without_tags(|t| {
        let hit = stopwords.contains(t) || irrelevant.contains(t);
        if hit {
            removed_listed.insert(t.to_string());
        }
        hit
    });
    let mut removed_single_zone = Vec::new();
    for pass in 1..=MAX_CLEAN_PASSES {
        let mut above: BTreeMap<String, usize> = BTreeMap::new();
        for ((_, t), r) in relative_importance(&current) {
            if r > 1.0 {
                *above.entry(t).or_insert(0) += 1;
            }
        }
        let single: BTreeSet<String> = above.into_iter().filter(|&(_, n)| n == 1).map(|(t, _)| t).collect();
        if single.is_empty() {
            return Ok((
                current,
                CleanReport {
                    removed_listed,
                    removed_single_zone,
                    iterations: pass,
                },
            ));
        }
        current = current.without_tags(|t| single.contains(t));
        removed_single_zone.push(single);
    }
    Err(Error::Numerical(format!(
        "tag cleaning did not reach a fixpoint in {MAX_CLEAN_PASSES} passes"
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterTag {
    pub tag: String,
    pub mean_r: f64,
}

/// Per cluster, the tags whose mean r over the cluster's zones exceeds 1,
/// highest first. A zone without a tag contributes r = 0. Zones absent
/// from the table are ignored.
pub fn cluster_tag_profile(
    table: &TagTable,
    labels: &BTreeMap<String, usize>,
) -> Result<BTreeMap<usize, Vec<ClusterTag>>> {
    let r = relative_importance(table);
    let zones = table.zones();
    for z in &zones {
        if !labels.contains_key(*z) {
            return Err(Error::invalid(format!("zone {z} has tags but no cluster label")));
        }
    }
    let mut members: BTreeMap<usize, usize> = BTreeMap::new();
    for z in &zones {
        *members.entry(labels[*z]).or_insert(0) += 1;
    }
    let mut sums: BTreeMap<usize, BTreeMap<&str, f64>> = BTreeMap::new();
    for ((z, t), v) in &r {
        *sums.entry(labels[z.as_str()]).or_default().entry(t.as_str()).or_insert(0.0) += v;
    }
    let mut out = BTreeMap::new();
    for (&label, &n) in &members {
        let mut tags: Vec<ClusterTag> = sums
            .get(&label)
            .into_iter()
            .flatten()
            .map(|(t, s)| ClusterTag {
                tag: t.to_string(),
                mean_r: s / n as f64,
            })
            .filter(|c| c.mean_r > 1.0)
            .collect();
        tags.sort_by(|a, b| b.mean_r.total_cmp(&a.mean_r).then_with(|| a.tag.cmp(&b.tag)));
        out.insert(label, tags);
    }
    Ok(out)
}
