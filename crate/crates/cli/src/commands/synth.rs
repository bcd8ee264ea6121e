//! Synthetic scenario with planted ground truth, written as pipeline inputs.

use parkbeam::synth::Scenario;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::record_run;

pub const SUMMARY: &str = "synth_summary.json";

pub fn run(run: &RunConfig) -> Result<()> {
    let config = run
        .config
        .scenario()
        .ok_or_else(|| CliError::config("the synth command needs a [synth] table in the config"))?;
    let dir = &run.inputs_dir;
    let summary = Scenario::generate(config)?.write(dir)?;
    log::info!(
        "synth: {} antennas on {} sites, {} zones, {} traffic rows in {}",
        summary.n_antennas,
        summary.n_sites,
        summary.n_zones,
        summary.traffic_rows,
        dir.display()
    );
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(CliError::io(dir))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let paths: Vec<_> = names.iter().map(|n| dir.join(n)).collect();
    let outputs: Vec<(&str, &std::path::Path)> = names.iter().map(String::as_str).zip(paths.iter().map(|p| p.as_path())).collect();
    record_run(run, "synth", &[], &outputs)
}
