use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use parkbeam_cli::commands;
use parkbeam_cli::config::{CenterChoice, Overrides, RunConfig};
use parkbeam_cli::error::{CliError, Result};

#[derive(Parser, Debug)]
#[command(name = "parkbeam", version, about = "Zone-level mobile traffic analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration; relative paths inside it resolve against its directory.
    #[arg(long, short, global = true, default_value = "parkbeam.toml")]
    config: PathBuf,

    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Directory holding the input files under their default names.
    #[arg(long, global = true)]
    inputs_dir: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "PARKBEAM_THREADS")]
    threads: Option<usize>,

    /// Minimum illumination share for an antenna to be selected.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Precision an antenna must exceed to be selected.
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Minimum zone quality.
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Unique users an antenna-day needs to be kept.
    #[arg(long, global = true)]
    min_users: Option<u64>,

    /// Fixed number of clusters.
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Levene p-value below which Welch replaces Student.
    #[arg(long, global = true)]
    gate_alpha: Option<f64>,

    #[arg(long, global = true, value_parser = ["mean", "median"])]
    levene_center: Option<String>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Select covering antennas per zone and compare with base-station attribution.
    Select,
    /// Attribute antenna traffic to zones and build daily volumes.
    Convert,
    /// Compute RCA and RSCA per scope and day window.
    Rsca,
    /// Cluster zones and profile the clusters.
    Cluster,
    /// Test zone and cluster RSCA against the city and correlate with indicators.
    Stats,
    /// Clean photo tags and rank them per cluster.
    Tags,
    /// Generate a synthetic scenario into the inputs directory.
    Synth,
    /// Run every stage in order.
    Pipeline,
}

fn absolute(p: Option<PathBuf>) -> Result<Option<PathBuf>> {
    p.map(|p| {
        if p.is_absolute() {
            Ok(p)
        } else {
            let cwd = std::env::current_dir().map_err(CliError::io("."))?;
            Ok(cwd.join(p))
        }
    })
    .transpose()
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    let overrides = Overrides {
        output_dir: absolute(cli.output_dir)?,
        inputs_dir: absolute(cli.inputs_dir)?,
        seed: cli.seed,
        alpha: cli.alpha,
        beta: cli.beta,
        gamma: cli.gamma,
        min_users: cli.min_users,
        k: cli.k,
        gate_alpha: cli.gate_alpha,
        levene_center: cli.levene_center.as_deref().map(|c| match c {
            "median" => CenterChoice::Median,
            _ => CenterChoice::Mean,
        }),
    };
    if !cli.config.is_file() {
        return Err(CliError::config(format!("config file {} not found", cli.config.display())));
    }
    let run = RunConfig::load(&cli.config, &overrides)?;
    log::debug!("config hash {}", run.hash);
    match cli.command {
        Command::Select => commands::select::run(&run),
        Command::Convert => commands::convert::run(&run),
        Command::Rsca => commands::rsca::run(&run),
        Command::Cluster => commands::cluster::run(&run),
        Command::Stats => commands::stats::run(&run),
        Command::Tags => commands::tags::run(&run),
        Command::Synth => commands::synth::run(&run),
        Command::Pipeline => commands::pipeline::run(&run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
