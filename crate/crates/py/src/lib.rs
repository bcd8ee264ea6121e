//! Python bindings: coverage selection, RCA/RSCA, spectral clustering,
//! two-sample tests, tag importance, the synthetic scenario generator and
//! the file-based pipeline.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use parkbeam::cluster::{adjusted_rand as ari, select_k, spectral_cluster, FeatureMatrix};
use parkbeam::coverage::{self, CoverageReport, SelectionThresholds};
use parkbeam::geom::GeoPoint;
use parkbeam::ingest::{load_sites, load_zones};
use parkbeam::metrics::{self, UnitAppMatrix};
use parkbeam::model::antenna_polygons;
use parkbeam::stats::{self, LeveneCenter, TestReport};
use parkbeam::synth::{self, ScenarioConfig};
use parkbeam::tags::{self, TagTable};
use parkbeam_cli::commands;
use parkbeam_cli::config::{Overrides, RunConfig};
use parkbeam_cli::error::CliError;

fn core_err(e: parkbeam::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Core(e) => core_err(e),
        e if e.exit_code() == 2 => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn thresholds(alpha: f64, beta: f64, gamma: f64) -> PyResult<SelectionThresholds> {
    SelectionThresholds::new(alpha, beta, gamma).map_err(core_err)
}

/// `Q = 2 CP I / (CP + I)`.
#[pyfunction]
fn coverage_quality(precision: f64, illumination: f64) -> PyResult<f64> {
    coverage::coverage_quality(precision, illumination).map_err(core_err)
}

/// Verdict name of a zone with the given illumination and quality.
#[pyfunction]
#[pyo3(signature = (illumination, quality, alpha=0.1, beta=0.8, gamma=0.4))]
fn classify(illumination: f64, quality: f64, alpha: f64, beta: f64, gamma: f64) -> PyResult<&'static str> {
    Ok(coverage::classify(illumination, quality, &thresholds(alpha, beta, gamma)?).as_str())
}

/// Selection outcome of one zone.
#[pyclass(name = "CoverageReport", frozen, get_all)]
struct PyCoverageReport {
    zone_id: String,
    zone_area: f64,
    precision: Option<f64>,
    illumination: Option<f64>,
    quality: Option<f64>,
    verdict: &'static str,
    /// `(antenna_id, illumination ratio, overlap area)` per selected antenna.
    selected: Vec<(String, f64, f64)>,
}

#[pymethods]
impl PyCoverageReport {
    fn __repr__(&self) -> String {
        format!(
            "CoverageReport(zone_id={:?}, verdict={:?}, quality={:?}, antennas={})",
            self.zone_id,
            self.verdict,
            self.quality,
            self.selected.len()
        )
    }
}

impl From<CoverageReport> for PyCoverageReport {
    fn from(r: CoverageReport) -> Self {
        PyCoverageReport {
            verdict: r.verdict.as_str(),
            selected: r.selected.into_iter().map(|s| (s.antenna_id, s.ratio, s.overlap_area)).collect(),
            zone_id: r.zone_id,
            zone_area: r.zone_area,
            precision: r.precision,
            illumination: r.illumination,
            quality: r.quality,
        }
    }
}

/// Runs antenna selection for a zone GeoJSON file and an antenna site CSV.
/// `bbox` is `(min_lon, min_lat, max_lon, max_lat)`; `origin` defaults to its center.
#[pyfunction]
#[pyo3(signature = (zones_path, sites_path, bbox, origin=None, alpha=0.1, beta=0.8, gamma=0.4))]
fn select_zones(
    py: Python<'_>,
    zones_path: PathBuf,
    sites_path: PathBuf,
    bbox: [f64; 4],
    origin: Option<[f64; 2]>,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> PyResult<Vec<PyCoverageReport>> {
    let t = thresholds(alpha, beta, gamma)?;
    let [lon, lat] = origin.unwrap_or([(bbox[0] + bbox[2]) / 2.0, (bbox[1] + bbox[3]) / 2.0]);
    let origin = GeoPoint::new(lon, lat);
    let reports = py
        .detach(|| {
            let zones = load_zones(&zones_path, origin)?;
            let sites = load_sites(&sites_path, origin)?;
            let area = synth::study_area(bbox, origin)?;
            let mut antennas = antenna_polygons(&sites, &area)?;
            antennas.sort_by(|a, b| a.antenna_id.cmp(&b.antenna_id));
            coverage::run_selection(&zones, &antennas, &t)
        })
        .map_err(core_err)?;
    Ok(reports.into_iter().map(Into::into).collect())
}

fn matrix(units: Vec<String>, cols: Vec<String>, rows: Vec<Vec<f64>>) -> PyResult<UnitAppMatrix> {
    UnitAppMatrix::from_rows(units, cols, &rows).map_err(core_err)
}

type Labeled = (Vec<String>, Vec<String>, Vec<Vec<f64>>);

/// RCA of a unit-by-app volume matrix. All-zero rows and columns are
/// dropped, so the returned labels may be a subset of the inputs.
#[pyfunction]
#[pyo3(signature = (units, cols, rows, symmetric=false))]
fn rca(units: Vec<String>, cols: Vec<String>, rows: Vec<Vec<f64>>, symmetric: bool) -> PyResult<Labeled> {
    let r = metrics::rca(&matrix(units, cols, rows)?).map_err(core_err)?;
    let n = r.units().len();
    let values = (0..n)
        .map(|u| {
            let row = r.row(u);
            if symmetric {
                row.iter().map(|&v| metrics::rsca(v)).collect()
            } else {
                row.to_vec()
            }
        })
        .collect();
    Ok((r.units().to_vec(), r.cols().to_vec(), values))
}

/// `(RCA - 1) / (RCA + 1)`.
#[pyfunction]
fn rsca(value: f64) -> f64 {
    metrics::rsca(value)
}

/// Outcome of a two-sample test.
#[pyclass(name = "TestResult", frozen, get_all)]
struct PyTestResult {
    test: &'static str,
    statistic: f64,
    df: f64,
    p_value: f64,
    levene_p: Option<f64>,
    stars: &'static str,
}

#[pymethods]
impl PyTestResult {
    fn __repr__(&self) -> String {
        format!(
            "TestResult(test={:?}, statistic={}, df={}, p_value={})",
            self.test, self.statistic, self.df, self.p_value
        )
    }
}

impl From<TestReport> for PyTestResult {
    fn from(t: TestReport) -> Self {
        PyTestResult {
            test: t.test.as_str(),
            statistic: t.statistic,
            df: t.df,
            p_value: t.p_value,
            levene_p: t.gate.map(|g| g.levene_p),
            stars: t.stars(),
        }
    }
}

fn center(name: &str) -> PyResult<LeveneCenter> {
    match name {
        "mean" => Ok(LeveneCenter::Mean),
        "median" => Ok(LeveneCenter::Median),
        other => Err(PyValueError::new_err(format!("center must be mean or median, not {other:?}"))),
    }
}

/// Student or Welch t-test, chosen by a Levene gate at `gate_alpha`.
#[pyfunction]
#[pyo3(signature = (x, y, gate_alpha=0.05, center="mean"))]
fn ttest(x: Vec<f64>, y: Vec<f64>, gate_alpha: f64, center: &str) -> PyResult<PyTestResult> {
    let c = self::center(center)?;
    Ok(stats::gated_ttest_centered(&x, &y, gate_alpha, c).map_err(core_err)?.into())
}

#[pyfunction]
#[pyo3(signature = (x, y, center="mean"))]
fn levene(x: Vec<f64>, y: Vec<f64>, center: &str) -> PyResult<PyTestResult> {
    Ok(stats::levene(&x, &y, self::center(center)?).map_err(core_err)?.into())
}

/// `(rho, two-sided p, n)`.
#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64, usize)> {
    let c = stats::pearson(&x, &y).map_err(core_err)?;
    Ok((c.rho, c.p_value, c.n))
}

/// Spectral clustering result.
#[pyclass(name = "Clustering", frozen, get_all)]
struct PyClustering {
    k: usize,
    silhouette: f64,
    /// Zone id to cluster label, labels numbered by first appearance.
    labels: BTreeMap<String, usize>,
    /// `(k, silhouette)` for every k scanned.
    scan: Vec<(usize, f64)>,
}

/// Clusters zones on z-scored feature rows. Without `k`, the k in
/// `k_min..=k_max` with the highest silhouette is chosen.
#[pyfunction]
#[pyo3(signature = (zones, rows, k=None, k_min=2, k_max=8, seed=1))]
fn cluster(
    py: Python<'_>,
    zones: Vec<String>,
    rows: Vec<Vec<f64>>,
    k: Option<usize>,
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> PyResult<PyClustering> {
    let dim = rows.first().map_or(0, Vec::len);
    let names = (0..dim).map(|j| format!("f{j}")).collect();
    let fm = FeatureMatrix::standardize(zones, names, &rows).map_err(core_err)?;
    py.detach(|| {
        let (best, scan, mut results) = match k {
            Some(k) if k < k_min || k > k_max => (k, Vec::new(), Vec::new()),
            _ => select_k(&fm, k_min..=k_max, seed)?,
        };
        let k = k.unwrap_or(best);
        let r = match results.iter().position(|r| r.k == k) {
            Some(i) => results.swap_remove(i),
            None => spectral_cluster(&fm, k, seed)?,
        };
        Ok(PyClustering {
            k,
            silhouette: r.silhouette,
            labels: fm.zones().iter().cloned().zip(r.labels).collect(),
            scan: scan.into_iter().map(|s| (s.k, s.silhouette)).collect(),
        })
    })
    .map_err(core_err)
}

#[pyfunction]
fn adjusted_rand(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    ari(&a, &b).map_err(core_err)
}

fn tag_table(counts: Vec<(String, String, u64)>) -> PyResult<TagTable> {
    TagTable::from_counts(counts).map_err(core_err)
}

/// Relative importance `r = n / (p_tag N_zone)` keyed by `(zone, tag)`.
#[pyfunction]
fn tag_importance(counts: Vec<(String, String, u64)>) -> PyResult<BTreeMap<(String, String), f64>> {
    Ok(tags::relative_importance(&tag_table(counts)?))
}

/// Removes listed words, then single-zone tags until a fixpoint. Returns
/// the kept `(zone, tag, count)` rows and the removed tags per pass.
#[pyfunction]
#[pyo3(signature = (counts, stopwords, irrelevant=Vec::new()))]
fn clean_tags(
    counts: Vec<(String, String, u64)>,
    stopwords: Vec<String>,
    irrelevant: Vec<String>,
) -> PyResult<(Vec<(String, String, u64)>, Vec<String>, Vec<Vec<String>>)> {
    let table = tag_table(counts)?;
    let (clean, report) = tags::clean_tags(
        &table,
        &stopwords.into_iter().collect(),
        &irrelevant.into_iter().collect(),
    )
    .map_err(core_err)?;
    let kept = clean.cells().map(|((z, t), n)| (z.clone(), t.clone(), n)).collect();
    let passes = report.removed_single_zone.into_iter().map(|s| s.into_iter().collect()).collect();
    Ok((kept, report.removed_listed.into_iter().collect(), passes))
}

/// A generated synthetic city with planted zone archetypes.
#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    inner: synth::Scenario,
}

#[pymethods]
impl PyScenario {
    /// `config` is TOML with generator keys; explicit keyword arguments win.
    #[new]
    #[pyo3(signature = (config=None, seed=None, n_sites=None, days=None))]
    fn new(
        py: Python<'_>,
        config: Option<&str>,
        seed: Option<u64>,
        n_sites: Option<usize>,
        days: Option<u32>,
    ) -> PyResult<Self> {
        let mut c: ScenarioConfig = match config {
            Some(text) => toml::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => ScenarioConfig::default(),
        };
        c.seed = seed.unwrap_or(c.seed);
        c.n_sites = n_sites.unwrap_or(c.n_sites);
        c.days = days.unwrap_or(c.days);
        let inner = py.detach(|| synth::Scenario::generate(c)).map_err(core_err)?;
        Ok(PyScenario { inner })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.config.seed
    }

    #[getter]
    fn antenna_ids(&self) -> Vec<String> {
        self.inner.antennas.iter().map(|a| a.antenna_id.clone()).collect()
    }

    #[getter]
    fn zone_ids(&self) -> Vec<String> {
        self.inner.zones.iter().map(|z| z.zone.zone_id.clone()).collect()
    }

    /// Noise-free weekday/weekend ratio per selected zone.
    fn expected_ratios(&self) -> PyResult<BTreeMap<String, f64>> {
        self.inner.expected_ratios().map_err(core_err)
    }

    /// One dict per zone with its planted archetype and verdict.
    fn ground_truth<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .ground_truth()
            .map_err(core_err)?
            .into_iter()
            .map(|g| {
                let d = PyDict::new(py);
                d.set_item("zone_id", g.zone_id)?;
                d.set_item("archetype", g.archetype)?;
                d.set_item("verdict", g.verdict.as_str())?;
                d.set_item("dominant_category", g.dominant_category.as_str())?;
                d.set_item("wd_we_multiplier", g.wd_we_multiplier)?;
                d.set_item("expected_ratio", g.expected_ratio)?;
                Ok(d)
            })
            .collect()
    }

    /// Writes every input file into `dir` and returns the summary counts.
    fn write<'py>(&self, py: Python<'py>, dir: PathBuf) -> PyResult<Bound<'py, PyDict>> {
        std::fs::create_dir_all(&dir).map_err(|e| PyRuntimeError::new_err(format!("{}: {e}", dir.display())))?;
        let s = py.detach(|| self.inner.write(&dir)).map_err(core_err)?;
        let d = PyDict::new(py);
        d.set_item("n_antennas", s.n_antennas)?;
        d.set_item("n_zones", s.n_zones)?;
        d.set_item("n_apps", s.n_apps)?;
        d.set_item("traffic_rows", s.traffic_rows)?;
        d.set_item("ineligible_rows", s.ineligible_rows)?;
        d.set_item("bbox", s.bbox)?;
        d.set_item("origin", s.origin)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(seed={}, antennas={}, zones={})",
            self.inner.config.seed,
            self.inner.antennas.len(),
            self.inner.zones.len()
        )
    }
}

/// Runs one pipeline command (or `"pipeline"` for all of them) from a TOML
/// config file and returns the config hash stamped on the artifacts.
#[pyfunction]
#[pyo3(signature = (config_path, command="pipeline", output_dir=None))]
fn run(py: Python<'_>, config_path: PathBuf, command: &str, output_dir: Option<PathBuf>) -> PyResult<String> {
    let stage: fn(&RunConfig) -> parkbeam_cli::error::Result<()> = match command {
        "select" => commands::select::run,
        "convert" => commands::convert::run,
        "rsca" => commands::rsca::run,
        "cluster" => commands::cluster::run,
        "stats" => commands::stats::run,
        "tags" => commands::tags::run,
        "synth" => commands::synth::run,
        "pipeline" => commands::pipeline::run,
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let overrides = Overrides {
        output_dir,
        ..Overrides::default()
    };
    py.detach(|| {
        let run = RunConfig::load(&config_path, &overrides)?;
        stage(&run)?;
        Ok(run.hash)
    })
    .map_err(cli_err)
}

#[pymodule]
#[pyo3(name = "parkbeam")]
fn parkbeam_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCoverageReport>()?;
    m.add_class::<PyTestResult>()?;
    m.add_class::<PyClustering>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(coverage_quality, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(select_zones, m)?)?;
    m.add_function(wrap_pyfunction!(rca, m)?)?;
    m.add_function(wrap_pyfunction!(rsca, m)?)?;
    m.add_function(wrap_pyfunction!(ttest, m)?)?;
    m.add_function(wrap_pyfunction!(levene, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(adjusted_rand, m)?)?;
    m.add_function(wrap_pyfunction!(tag_importance, m)?)?;
    m.add_function(wrap_pyfunction!(clean_tags, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_names_follow_the_thresholds() {
        assert_eq!(classify(0.9, 0.5, 0.1, 0.8, 0.4).unwrap(), "selected");
        assert_ne!(classify(0.5, 0.5, 0.1, 0.8, 0.4).unwrap(), "selected");
    }

    #[test]
    fn rca_labels_survive_the_round_trip() {
        let (u, c, v) = rca(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![vec![3.0, 1.0], vec![1.0, 3.0]],
            true,
        )
        .unwrap();
        assert_eq!((u.len(), c.len()), (2, 2));
        assert!(v[0][0] > 0.0 && v[0][1] < 0.0);
        assert!((v[0][0] + v[1][0]).abs() > 0.0);
    }

    #[test]
    fn cleaning_reports_passes() {
        let counts = vec![
            ("z1".into(), "a".into(), 5),
            ("z2".into(), "a".into(), 5),
            ("z1".into(), "the".into(), 9),
            ("z1".into(), "solo".into(), 4),
            ("z2".into(), "b".into(), 1),
        ];
        let (kept, listed, passes) = clean_tags(counts, vec!["the".into()], vec![]).unwrap();
        assert_eq!(listed, vec!["the".to_string()]);
        assert!(kept.iter().all(|(_, t, _)| t != "the"));
        assert!(!passes.is_empty());
    }
}
