//! Artifact files: provenance header, number formatting, upstream reads
//! and the run manifest.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

/// Six significant digits, no trailing zeros. Plain notation for
/// magnitudes in [1e-4, 1e15), exponent notation outside.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    let m = rounded.abs();
    if (1e-4..1e15).contains(&m) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}

pub fn fmt6_opt(x: Option<f64>) -> String {
    x.map(fmt6).unwrap_or_default()
}

/// Exact byte volume. Whole numbers print without a fraction; weighted
/// volumes use the shortest representation that reads back identically.
pub fn fmt_bytes(x: f64) -> String {
    x.to_string()
}

pub fn header_line(run: &RunConfig) -> String {
    format!("# config_hash={},seed={}", run.hash, run.seed())
}

/// CSV writer whose first line is the provenance header.
pub struct ArtifactWriter {
    path: PathBuf,
    name: String,
    inner: csv::Writer<BufWriter<File>>,
}

impl ArtifactWriter {
    pub fn create(run: &RunConfig, name: &str, columns: &[&str]) -> Result<Self> {
        std::fs::create_dir_all(&run.output_dir).map_err(CliError::io(&run.output_dir))?;
        let path = run.output_dir.join(name);
        let mut file = BufWriter::new(File::create(&path).map_err(CliError::io(&path))?);
        writeln!(file, "{}", header_line(run)).map_err(CliError::io(&path))?;
        let mut inner = csv::Writer::from_writer(file);
        inner.write_record(columns)?;
        Ok(ArtifactWriter {
            path,
            name: name.to_string(),
            inner,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        Ok(())
    }

    /// Flushes and returns the artifact name.
    pub fn finish(mut self) -> Result<String> {
        self.inner.flush().map_err(CliError::io(&self.path))?;
        Ok(self.name)
    }
}

/// Opens an artifact written by `producer`, checking its columns.
pub fn read_artifact(
    run: &RunConfig,
    name: &str,
    producer: &'static str,
    columns: &[&str],
) -> Result<(PathBuf, csv::Reader<BufReader<File>>)> {
    let path = run.output_dir.join(name);
    if !path.is_file() {
        return Err(CliError::MissingArtifact {
            artifact: path,
            command: producer,
        });
    }
    let file = BufReader::new(File::open(&path).map_err(CliError::io(&path))?);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != columns {
        return Err(CliError::artifact(
            &path,
            format!("expected columns {}, found {}", columns.join(","), found.join(",")),
        ));
    }
    Ok((path, rdr))
}

pub fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, column: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| CliError::artifact(path, format!("line {line}: {column} {raw:?}: {e}")))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(CliError::io(path))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(CliError::io(path))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommandEntry {
    pub config_hash: String,
    pub seed: u64,
    /// Input role to content hash.
    pub inputs: BTreeMap<String, String>,
    /// Output file (relative to its directory) to content hash.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub commands: BTreeMap<String, CommandEntry>,
}

/// Replaces the manifest entry of `command`. Paths in `inputs` and
/// `outputs` are hashed; only their file names are recorded.
pub fn record_run(
    run: &RunConfig,
    command: &str,
    inputs: &[(&str, &Path)],
    outputs: &[(&str, &Path)],
) -> Result<()> {
    std::fs::create_dir_all(&run.output_dir).map_err(CliError::io(&run.output_dir))?;
    let path = run.output_dir.join(MANIFEST);
    let mut manifest = if path.is_file() {
        let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
        serde_json::from_str(&text).unwrap_or_else(|e| {
            log::warn!("{}: unreadable manifest replaced ({e})", path.display());
            Manifest::default()
        })
    } else {
        Manifest::default()
    };
    manifest.tool = "parkbeam".into();
    manifest.version = env!("CARGO_PKG_VERSION").into();
    let mut entry = CommandEntry {
        config_hash: run.hash.clone(),
        seed: run.seed(),
        ..CommandEntry::default()
    };
    for (role, p) in inputs {
        entry.inputs.insert(role.to_string(), sha256_file(p)?);
    }
    for (name, p) in outputs {
        entry.outputs.insert(name.to_string(), sha256_file(p)?);
    }
    manifest.commands.insert(command.to_string(), entry);
    let mut f = BufWriter::new(File::create(&path).map_err(CliError::io(&path))?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f).map_err(CliError::io(&path))?;
    f.flush().map_err(CliError::io(&path))?;
    Ok(())
}

/// [`record_run`] for artifacts in the output directory.
pub fn record_outputs(run: &RunConfig, command: &str, inputs: &[(&str, &Path)], names: &[String]) -> Result<()> {
    let paths: Vec<PathBuf> = names.iter().map(|n| run.output_dir.join(n)).collect();
    let outputs: Vec<(&str, &Path)> = names.iter().map(String::as_str).zip(paths.iter().map(PathBuf::as_path)).collect();
    record_run(run, command, inputs, &outputs)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt6(0.529411764), "0.529412");
        assert_eq!(fmt6(1234567.0), "1234570");
        assert_eq!(fmt6(-0.000123456789), "-0.000123457");
        assert_eq!(fmt6(2.0), "2");
        assert_eq!(fmt6(0.0), "0");
        assert_eq!(fmt6(1.434823e-26), "1.43482e-26");
        assert_eq!(fmt6(0.00001234567), "1.23457e-5");
        assert_eq!(fmt6_opt(None), "");
    }

    #[test]
    fn byte_counts_are_exact() {
        assert_eq!(fmt_bytes(123456789012.0), "123456789012");
        let w = 0.1 + 0.2;
        assert_eq!(fmt_bytes(w).parse::<f64>().unwrap(), w);
    }
}
