use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use parkbeam_cli::output::{read_manifest, sha256_file};

const SMALL: &str = r#"
seed = 3
output_dir = "out"

[cluster]
k_min = 2
k_max = 4

[synth]
n_sites = 15
extent_m = [3000.0, 3000.0]
days = 14
ineligible_antenna_days = 2

[synth.zones]
selected = 8
no_antenna = 2
low_illumination = 2
low_quality = 2
"#;

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("parkbeam.toml"), config).unwrap();
    dir
}

fn parkbeam(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parkbeam"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = parkbeam(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn missing_upstream_artifact_exits_2_and_names_the_command() {
    let dir = setup(SMALL);
    ok(dir.path(), &["synth"]);
    let out = parkbeam(dir.path(), &["convert"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("coverage_weights.csv") && err.contains("parkbeam select"), "{err}");

    let out = parkbeam(dir.path(), &["tags"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parkbeam cluster"));
}

#[test]
fn invalid_config_exits_2() {
    let dir = setup("seed = 1\nunknown_key = 3\n");
    let out = parkbeam(dir.path(), &["select"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));

    let dir = setup("[selection]\nalpha = 1.5\n");
    assert_eq!(parkbeam(dir.path(), &["select"]).status.code(), Some(2));

    let dir = setup(SMALL);
    assert_eq!(parkbeam(dir.path(), &["select", "--gamma", "-1"]).status.code(), Some(2));
    // no inputs were generated
    assert_eq!(parkbeam(dir.path(), &["select"]).status.code(), Some(2));
}

#[test]
fn pipeline_matches_the_commands_run_one_by_one() {
    let a = setup(SMALL);
    ok(a.path(), &["pipeline"]);
    let b = setup(SMALL);
    for cmd in ["synth", "select", "convert", "rsca", "cluster", "stats", "tags"] {
        ok(b.path(), &[cmd]);
    }
    let (fa, fb) = (files(&a.path().join("out")), files(&b.path().join("out")));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        assert!(bytes == &fb[name], "{name} differs");
    }
    assert_eq!(files(&a.path().join("data")), files(&b.path().join("data")));
}

#[test]
fn artifacts_carry_the_header_and_the_manifest_hashes_them() {
    let dir = setup(SMALL);
    ok(dir.path(), &["pipeline"]);
    let out = dir.path().join("out");
    let manifest = read_manifest(&out).unwrap();
    assert_eq!(manifest.commands.len(), 7);
    let hash = &manifest.commands["select"].config_hash;
    assert_eq!(hash.len(), 16);
    for (cmd, entry) in &manifest.commands {
        assert_eq!(&entry.config_hash, hash);
        assert_eq!(entry.seed, 3);
        let base = if cmd == "synth" { dir.path().join("data") } else { out.clone() };
        for (name, digest) in &entry.outputs {
            assert_eq!(&sha256_file(&base.join(name)).unwrap(), digest, "{cmd}/{name}");
            if name.ends_with(".csv") && cmd != "synth" {
                let text = std::fs::read_to_string(base.join(name)).unwrap();
                assert_eq!(text.lines().next().unwrap(), format!("# config_hash={hash},seed=3"));
            }
        }
    }
    assert!(manifest.commands["convert"].inputs.contains_key("traffic"));

    // a threshold flag changes the hash; moving the output directory does not
    ok(dir.path(), &["select", "--alpha", "0.2", "--output-dir", "other"]);
    let other = read_manifest(&dir.path().join("other")).unwrap();
    assert_ne!(&other.commands["select"].config_hash, hash);
    ok(dir.path(), &["select", "--output-dir", "third"]);
    let third = read_manifest(&dir.path().join("third")).unwrap();
    assert_eq!(&third.commands["select"].config_hash, hash);
    assert_eq!(third.commands["select"].outputs, manifest.commands["select"].outputs);
}

#[test]
fn fixed_k_keeps_the_scan() {
    let dir = setup(SMALL);
    ok(dir.path(), &["pipeline", "--k", "2"]);
    let text = std::fs::read_to_string(dir.path().join("out/silhouette_by_k.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().any(|r| r.starts_with("2,") && r.ends_with(",true")));
    let clusters = std::fs::read_to_string(dir.path().join("out/clusters.csv")).unwrap();
    let labels: std::collections::BTreeSet<&str> = clusters.lines().skip(2).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(labels.len(), 2);
}
