//! Every stage in order. With a `[synth]` table the inputs are generated
//! first.

use crate::config::RunConfig;
use crate::error::Result;

type Stage = (&'static str, fn(&RunConfig) -> Result<()>);

pub const STAGES: [Stage; 6] = [
    ("select", super::select::run),
    ("convert", super::convert::run),
    ("rsca", super::rsca::run),
    ("cluster", super::cluster::run),
    ("stats", super::stats::run),
    ("tags", super::tags::run),
];

pub fn run(run: &RunConfig) -> Result<()> {
    if run.config.synth.is_some() {
        let t = std::time::Instant::now();
        super::synth::run(run)?;
        log::info!("pipeline: synth done in {:.2?}", t.elapsed());
    }
    for (name, stage) in STAGES {
        let t = std::time::Instant::now();
        stage(run)?;
        log::info!("pipeline: {name} done in {:.2?}", t.elapsed());
    }
    Ok(())
}
