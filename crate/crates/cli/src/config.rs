//! TOML pipeline configuration, flag overrides and path resolution.
//!
//! Relative paths resolve against the directory holding the config file.
//! The config hash covers every setting that can change an output value and
//! none of the paths, so relocating a run keeps its hash.

use std::path::{Path, PathBuf};

use parkbeam::coverage::SelectionThresholds;
use parkbeam::geom::GeoPoint;
use parkbeam::ingest::DEFAULT_MIN_USERS;
use parkbeam::stats::{LeveneCenter, DEFAULT_GATE_ALPHA};
use parkbeam::synth::ScenarioConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    /// Directory holding inputs under their default names; `synth` writes here.
    pub dir: Option<PathBuf>,
    pub sites: Option<PathBuf>,
    pub zones: Option<PathBuf>,
    pub traffic: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub eligibility: Option<PathBuf>,
    pub calendar: Option<PathBuf>,
    pub socio: Option<PathBuf>,
    pub tags: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub irrelevant: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Projection origin `[lon, lat]`.
    pub origin: [f64; 2],
    /// Study area `[min_lon, min_lat, max_lon, max_lat]`.
    pub bbox: [f64; 4],
    /// City center for zone distances; defaults to the origin.
    pub center: Option<[f64; 2]>,
}

impl Geometry {
    pub fn origin_point(&self) -> GeoPoint {
        GeoPoint::new(self.origin[0], self.origin[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EligibilitySettings {
    pub min_users: u64,
}

impl Default for EligibilitySettings {
    fn default() -> Self {
        EligibilitySettings {
            min_users: DEFAULT_MIN_USERS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    /// Fixed cluster count; the silhouette scan over `k_min..=k_max` runs
    /// either way and is reported.
    pub k: Option<usize>,
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        ClusterSettings {
            k: None,
            k_min: 2,
            k_max: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterChoice {
    #[default]
    Mean,
    Median,
}

impl CenterChoice {
    pub fn center(self) -> LeveneCenter {
        match self {
            CenterChoice::Mean => LeveneCenter::Mean,
            CenterChoice::Median => LeveneCenter::Median,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSettings {
    pub gate_alpha: f64,
    pub levene_center: CenterChoice,
}

impl Default for StatsSettings {
    fn default() -> Self {
        StatsSettings {
            gate_alpha: DEFAULT_GATE_ALPHA,
            levene_center: CenterChoice::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Drives clustering and, when present, the synthetic scenario.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub inputs: InputPaths,
    pub geometry: Option<Geometry>,
    #[serde(default)]
    pub selection: SelectionThresholds,
    #[serde(default)]
    pub eligibility: EligibilitySettings,
    #[serde(default)]
    pub cluster: ClusterSettings,
    #[serde(default)]
    pub stats: StatsSettings,
    pub synth: Option<ScenarioConfig>,
}

fn default_seed() -> u64 {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: default_seed(),
            output_dir: default_output(),
            inputs: InputPaths::default(),
            geometry: None,
            selection: SelectionThresholds::default(),
            eligibility: EligibilitySettings::default(),
            cluster: ClusterSettings::default(),
            stats: StatsSettings::default(),
            synth: None,
        }
    }
}

/// Command line values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub inputs_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub min_users: Option<u64>,
    pub k: Option<usize>,
    pub gate_alpha: Option<f64>,
    pub levene_center: Option<CenterChoice>,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
        if let Some(v) = &o.inputs_dir {
            self.inputs.dir = Some(v.clone());
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.alpha {
            self.selection.alpha = v;
        }
        if let Some(v) = o.beta {
            self.selection.beta = v;
        }
        if let Some(v) = o.gamma {
            self.selection.gamma = v;
        }
        if let Some(v) = o.min_users {
            self.eligibility.min_users = v;
        }
        if let Some(v) = o.k {
            self.cluster.k = Some(v);
        }
        if let Some(v) = o.gate_alpha {
            self.stats.gate_alpha = v;
        }
        if let Some(v) = o.levene_center {
            self.stats.levene_center = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        let c = &self.cluster;
        if c.k_min < 2 || c.k_max < c.k_min {
            return Err(CliError::config(format!("cluster k range {}..={} is invalid", c.k_min, c.k_max)));
        }
        if let Some(k) = c.k {
            if k < 2 {
                return Err(CliError::config(format!("cluster k = {k} must be at least 2")));
            }
        }
        if !(self.stats.gate_alpha > 0.0 && self.stats.gate_alpha < 1.0) {
            return Err(CliError::config("stats gate_alpha must lie in (0, 1)"));
        }
        if let Some(s) = &self.synth {
            s.validate()?;
        }
        Ok(())
    }

    /// Scenario with the run seed and selection thresholds applied.
    pub fn scenario(&self) -> Option<ScenarioConfig> {
        self.synth.clone().map(|mut s| {
            s.seed = self.seed;
            s.thresholds = self.selection;
            s
        })
    }

    /// Explicit geometry, else the synthetic study area.
    pub fn geometry(&self) -> Result<Geometry> {
        if let Some(g) = self.geometry {
            return Ok(g);
        }
        match self.scenario() {
            Some(s) => Ok(Geometry {
                origin: s.origin,
                bbox: s.bbox_lonlat(),
                center: None,
            }),
            None => Err(CliError::config("a [geometry] table (origin, bbox) or a [synth] table is required")),
        }
    }

    /// Hex SHA-256 prefix of the path-free settings.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.inputs = InputPaths::default();
        let text = toml::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// A configuration with every path resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
    pub output_dir: PathBuf,
    pub inputs_dir: PathBuf,
    pub hash: String,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let config = PipelineConfig::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::new(config, base, overrides)
    }

    pub fn new(mut config: PipelineConfig, base_dir: PathBuf, overrides: &Overrides) -> Result<Self> {
        config.apply(overrides);
        config.validate()?;
        let output_dir = base_dir.join(&config.output_dir);
        let inputs_dir = base_dir.join(config.inputs.dir.clone().unwrap_or_else(|| PathBuf::from("data")));
        let hash = config.hash();
        Ok(RunConfig {
            config,
            base_dir,
            output_dir,
            inputs_dir,
            hash,
        })
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    fn explicit(&self, p: &Option<PathBuf>) -> Option<PathBuf> {
        p.as_ref().map(|p| self.base_dir.join(p))
    }

    /// Path of a required input; it must exist.
    pub fn input(&self, role: Input) -> Result<PathBuf> {
        let path = self.input_path(role);
        if !path.is_file() {
            return Err(CliError::config(format!(
                "{} input {} does not exist",
                role.name(),
                path.display()
            )));
        }
        Ok(path)
    }

    /// Path of an optional input: explicit paths must exist, default names
    /// may be absent.
    pub fn optional_input(&self, role: Input) -> Result<Option<PathBuf>> {
        let explicit = self.explicit(role.field(&self.config.inputs)).is_some();
        let path = self.input_path(role);
        match (path.is_file(), explicit) {
            (true, _) => Ok(Some(path)),
            (false, true) => Err(CliError::config(format!(
                "{} input {} does not exist",
                role.name(),
                path.display()
            ))),
            (false, false) => Ok(None),
        }
    }

    pub fn input_path(&self, role: Input) -> PathBuf {
        self.explicit(role.field(&self.config.inputs))
            .unwrap_or_else(|| self.inputs_dir.join(role.default_name()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    Sites,
    Zones,
    Traffic,
    Catalog,
    Eligibility,
    Calendar,
    Socio,
    Tags,
    Stopwords,
    Irrelevant,
}

impl Input {
    pub fn name(self) -> &'static str {
        match self {
            Input::Sites => "sites",
            Input::Zones => "zones",
            Input::Traffic => "traffic",
            Input::Catalog => "catalog",
            Input::Eligibility => "eligibility",
            Input::Calendar => "calendar",
            Input::Socio => "socio",
            Input::Tags => "tags",
            Input::Stopwords => "stopwords",
            Input::Irrelevant => "irrelevant",
        }
    }

    pub fn default_name(self) -> &'static str {
        match self {
            Input::Sites => "sites.csv",
            Input::Zones => "zones.geojson",
            Input::Traffic => "traffic.csv",
            Input::Catalog => "catalog.csv",
            Input::Eligibility => "eligibility.csv",
            Input::Calendar => "calendar.csv",
            Input::Socio => "socio.csv",
            Input::Tags => "tags.csv",
            Input::Stopwords => "stopwords.txt",
            Input::Irrelevant => "irrelevant.txt",
        }
    }

    fn field(self, p: &InputPaths) -> &Option<PathBuf> {
        match self {
            Input::Sites => &p.sites,
            Input::Zones => &p.zones,
            Input::Traffic => &p.traffic,
            Input::Catalog => &p.catalog,
            Input::Eligibility => &p.eligibility,
            Input::Calendar => &p.calendar,
            Input::Socio => &p.socio,
            Input::Tags => &p.tags,
            Input::Stopwords => &p.stopwords,
            Input::Irrelevant => &p.irrelevant,
        }
    }
}
