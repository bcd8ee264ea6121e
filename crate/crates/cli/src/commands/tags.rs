//! Photo-tag relative importance of the clustered zones and the tags that
//! characterize each cluster.

use parkbeam::ingest::{load_tags, load_word_list};
use parkbeam::tags::{clean_tags, cluster_tag_profile, expected_count, relative_importance, tag_probability};

use super::*;
use crate::config::{Input, RunConfig};
use crate::error::Result;
use crate::output::{fmt6, record_outputs, ArtifactWriter};

pub fn run(run: &RunConfig) -> Result<()> {
    let labels = read_clusters(run)?;
    let tags_path = run.input(Input::Tags)?;
    let stopwords_path = run.input(Input::Stopwords)?;
    let irrelevant_path = run.optional_input(Input::Irrelevant)?;
    let table = load_tags(&tags_path)?;
    let stopwords = load_word_list(&stopwords_path)?;
    let irrelevant = irrelevant_path.as_deref().map(load_word_list).transpose()?.unwrap_or_default();

    let unlabeled: BTreeSet<String> = table
        .zones()
        .into_iter()
        .filter(|z| !labels.contains_key(*z))
        .map(str::to_string)
        .collect();
    if !unlabeled.is_empty() {
        log::info!("tags: {} zones without a cluster label left out", unlabeled.len());
    }
    let table = parkbeam::tags::TagTable::from_counts(
        table
            .cells()
            .filter(|((z, _), _)| labels.contains_key(z))
            .map(|((z, t), n)| (z.clone(), t.clone(), n)),
    )?;
    let (clean, report) = clean_tags(&table, &stopwords, &irrelevant)?;
    log::info!(
        "tags: {} listed and {} single-zone tags removed in {} passes",
        report.removed_listed.len(),
        report.removed_single_zone.iter().map(BTreeSet::len).sum::<usize>(),
        report.iterations
    );

    let mut importance = ArtifactWriter::create(run, TAG_IMPORTANCE, &TAG_IMPORTANCE_COLUMNS)?;
    if !clean.is_empty() {
        let p = tag_probability(&clean);
        let zone_totals = clean.zone_totals();
        let r = relative_importance(&clean);
        for ((z, t), n) in clean.cells() {
            let p_tag = p[t.as_str()];
            importance.row([
                z.clone(),
                t.clone(),
                n.to_string(),
                fmt6(p_tag),
                fmt6(expected_count(p_tag, zone_totals[z.as_str()])),
                fmt6(r[&(z.clone(), t.clone())]),
            ])?;
        }
    }

    let mut ranked = ArtifactWriter::create(run, CLUSTER_TAGS, &CLUSTER_TAGS_COLUMNS)?;
    if !clean.is_empty() {
        for (c, tags) in cluster_tag_profile(&clean, &labels)? {
            for (i, t) in tags.iter().enumerate() {
                ranked.row([c.to_string(), (i + 1).to_string(), t.tag.clone(), fmt6(t.mean_r)])?;
            }
        }
    }

    let mut cleaning = ArtifactWriter::create(run, TAG_CLEANING, &TAG_CLEANING_COLUMNS)?;
    for t in &report.removed_listed {
        let reason = if stopwords.contains(t) { "stopword" } else { "irrelevant" };
        cleaning.row([t.as_str(), reason, "0"])?;
    }
    for (pass, tags) in report.removed_single_zone.iter().enumerate() {
        for t in tags {
            cleaning.row([t.as_str(), "single_zone", &(pass + 1).to_string()])?;
        }
    }

    let outputs = [importance.finish()?, ranked.finish()?, cleaning.finish()?];
    let mut inputs: Vec<(&str, &std::path::Path)> = vec![("tags", &tags_path), ("stopwords", &stopwords_path)];
    if let Some(p) = &irrelevant_path {
        inputs.push(("irrelevant", p));
    }
    record_outputs(run, "tags", &inputs, &outputs)
}
