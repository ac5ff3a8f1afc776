//! Experiment configuration: TOML file form, flag overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use morpho_core::optimizers::{FitnessCombinator, Method};
use morpho_core::vehicle::{
    BodyDesign, Environment, EnvironmentSet, Pose, SimProfile, Vec2, DEFAULT_BODY_LENGTH, DEFAULT_START_DISTANCE,
    HALF_BODY, WEIGHT_LIMIT,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(Invalid),
}

/// A rejected value, located in the config file when it came from there.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub origin: String,
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}: {}", self.origin, line, self.key, self.message),
            None => write!(f, "{}: {}: {}", self.origin, self.key, self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Full,
    Desk,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub name: ProfileKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensor_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body_length: Option<f64>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            name: ProfileKind::Desk,
            dt: None,
            steps: None,
            success_radius: None,
            sensor_floor: None,
            body_length: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    /// Distance from the light to each start position.
    pub distance: f64,
    /// How many of the four diagonal starts to use, in the order
    /// `(d,d), (d,-d), (-d,d), (-d,-d)`.
    pub count: usize,
    /// Initial heading per environment in radians; a single value applies to all.
    pub headings: Vec<f64>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            distance: DEFAULT_START_DISTANCE,
            count: 4,
            headings: vec![0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub bins: usize,
    pub grid_n: usize,
    pub store_success_matrices: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            bins: 5,
            grid_n: 41,
            store_success_matrices: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub methods: Vec<Method>,
    pub budget: usize,
    pub seeds: usize,
    /// Metrics table from an earlier sweep; when set, designs are drawn from it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<PathBuf>,
    /// Number of designs sampled, stratified by `M_L`; all designs when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            budget: 3000,
            seeds: 3,
            metrics: None,
            sample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CooptConfig {
    pub budget: usize,
    pub seeds: usize,
}

impl Default for CooptConfig {
    fn default() -> Self {
        Self {
            budget: 5000,
            seeds: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HillClimbSection {
    pub population: usize,
    pub generations: usize,
    pub mutation: f64,
    pub seeds: usize,
    pub combinators: Vec<FitnessCombinator>,
    /// `[l1x, l1y, l2x, l2y]`.
    pub design: [f64; 4],
}

impl Default for HillClimbSection {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 300,
            mutation: 0.05,
            seeds: 10,
            combinators: FitnessCombinator::ALL.to_vec(),
            design: BodyDesign::canonical().to_array(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DtwConfig {
    /// `[l1x, l1y, l2x, l2y, w1, w2]` per genome.
    pub genomes: Vec<[f64; 6]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory.
    pub out: PathBuf,
    pub profile: ProfileConfig,
    pub environments: EnvConfig,
    pub sweep: SweepConfig,
    pub train: TrainConfig,
    pub coopt: CooptConfig,
    pub hillclimb: HillClimbSection,
    pub dtw: DtwConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: PathBuf::from("out"),
            profile: ProfileConfig::default(),
            environments: EnvConfig::default(),
            sweep: SweepConfig::default(),
            train: TrainConfig::default(),
            coopt: CooptConfig::default(),
            hillclimb: HillClimbSection::default(),
            dtw: DtwConfig::default(),
        }
    }
}

/// Config plus the text it came from, for line-addressed diagnostics.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    origin: String,
    source: Option<String>,
}

impl LoadedConfig {
    pub fn defaults() -> Self {
        Self {
            config: ExperimentConfig::default(),
            origin: "<defaults>".to_string(),
            source: None,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: origin.clone(),
            source,
        })?;
        Self::from_str_with_origin(&text, &origin)
    }

    pub fn from_str_with_origin(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_col(text, s.start))
                .unwrap_or((1, 1));
            ConfigError::Parse {
                path: origin.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        Ok(Self {
            config,
            origin: origin.to_string(),
            source: Some(text.to_string()),
        })
    }

    /// Checks every value against the boxes of the owning modules.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        collect_problems(&self.config, &mut |key: &str, message: String| {
            problems.push((key.to_string(), message));
        });
        match problems.into_iter().next() {
            None => Ok(()),
            Some((key, message)) => Err(ConfigError::Invalid(Invalid {
                line: self.source.as_deref().and_then(|s| locate_key(s, &key)),
                origin: self.origin.clone(),
                key,
                message,
            })),
        }
    }
}

fn collect_problems(c: &ExperimentConfig, report: &mut dyn FnMut(&str, String)) {
    if let Err(e) = c.sim_profile() {
        report("profile", e);
    }
    let env = &c.environments;
    if !(env.distance > 0.0 && env.distance.is_finite()) {
        report("environments.distance", format!("must be positive, got {}", env.distance));
    }
    if !(1..=4).contains(&env.count) {
        report("environments.count", format!("must be in 1..=4, got {}", env.count));
    }
    if env.headings.len() != 1 && env.headings.len() != env.count {
        report(
            "environments.headings",
            format!("needs 1 or {} values, got {}", env.count, env.headings.len()),
        );
    }
    if env.headings.iter().any(|h| !h.is_finite()) {
        report("environments.headings", "headings must be finite".to_string());
    }
    if c.sweep.bins == 0 {
        report("sweep.bins", "must be at least 1".to_string());
    }
    if c.sweep.grid_n == 0 || c.sweep.grid_n.is_multiple_of(2) {
        report("sweep.grid_n", format!("must be odd and positive, got {}", c.sweep.grid_n));
    }
    if c.sweep.grid_n > u16::MAX as usize {
        report("sweep.grid_n", format!("must fit in 16 bits, got {}", c.sweep.grid_n));
    }
    if c.train.methods.is_empty() {
        report("train.methods", "must list at least one method".to_string());
    }
    if c.train.budget == 0 {
        report("train.budget", "must be at least 1".to_string());
    }
    if c.train.seeds == 0 {
        report("train.seeds", "must be at least 1".to_string());
    }
    if c.train.sample == Some(0) {
        report("train.sample", "must be at least 1".to_string());
    }
    if c.coopt.budget < morpho_core::coopt::POPULATION {
        report(
            "coopt.budget",
            format!(
                "must be at least the population size {}, got {}",
                morpho_core::coopt::POPULATION,
                c.coopt.budget
            ),
        );
    }
    if c.coopt.seeds == 0 {
        report("coopt.seeds", "must be at least 1".to_string());
    }
    let h = &c.hillclimb;
    if h.population == 0 {
        report("hillclimb.population", "must be at least 1".to_string());
    }
    if h.generations == 0 {
        report("hillclimb.generations", "must be at least 1".to_string());
    }
    if !(h.mutation >= 0.0 && h.mutation.is_finite()) {
        report("hillclimb.mutation", format!("must be non-negative, got {}", h.mutation));
    }
    if h.seeds == 0 {
        report("hillclimb.seeds", "must be at least 1".to_string());
    }
    if h.combinators.is_empty() {
        report("hillclimb.combinators", "must list at least one combinator".to_string());
    }
    if h.design.iter().any(|v| !(-HALF_BODY..=HALF_BODY).contains(v)) {
        report("hillclimb.design", "coordinates must lie in [-0.5, 0.5]".to_string());
    }
    for g in &c.dtw.genomes {
        if g[..4].iter().any(|v| !(-HALF_BODY..=HALF_BODY).contains(v)) {
            report("dtw.genomes", "sensor coordinates must lie in [-0.5, 0.5]".to_string());
        }
        if g[4..].iter().any(|v| !(-WEIGHT_LIMIT..=WEIGHT_LIMIT).contains(v)) {
            report("dtw.genomes", "weights must lie in [-1, 1]".to_string());
        }
    }
}

impl ExperimentConfig {
    pub fn sim_profile(&self) -> Result<SimProfile, String> {
        let p = &self.profile;
        let base = match p.name {
            ProfileKind::Full => SimProfile::full(),
            ProfileKind::Desk => SimProfile::desk(),
            ProfileKind::Custom => {
                if p.dt.is_none() || p.steps.is_none() {
                    return Err("a custom profile needs both dt and steps".to_string());
                }
                SimProfile::desk()
            }
        };
        SimProfile::new(
            p.dt.unwrap_or(base.dt),
            p.steps.unwrap_or(base.steps),
            p.success_radius.unwrap_or(base.success_radius),
            p.sensor_floor.unwrap_or(base.sensor_floor),
            p.body_length.unwrap_or(DEFAULT_BODY_LENGTH),
        )
        .map_err(|e| e.to_string())
    }

    pub fn environment_set(&self) -> Result<EnvironmentSet, String> {
        let e = &self.environments;
        let radius = self.sim_profile()?.success_radius;
        let d = e.distance / std::f64::consts::SQRT_2;
        let corners = [Vec2::new(d, d), Vec2::new(d, -d), Vec2::new(-d, d), Vec2::new(-d, -d)];
        let envs = corners
            .iter()
            .take(e.count)
            .enumerate()
            .map(|(i, c)| {
                let heading = if e.headings.len() == 1 { e.headings[0] } else { e.headings[i] };
                let pose = Pose::new(c.x, c.y, heading).map_err(|err| err.to_string())?;
                Environment::new(pose, radius).map_err(|err| err.to_string())
            })
            .collect::<Result<Vec<_>, _>>()?;
        EnvironmentSet::new(envs).map_err(|err| err.to_string())
    }

    pub fn hillclimb_design(&self) -> BodyDesign {
        BodyDesign::from_array_clamped(self.hillclimb.design)
    }

    /// Canonical TOML form; parsing it yields an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// [`to_toml`](Self::to_toml) without the output directory, so runs that
    /// differ only in where they write record the same configuration.
    pub fn snapshot_toml(&self) -> String {
        let mut v = toml::Value::try_from(self).expect("config is serializable");
        if let Some(t) = v.as_table_mut() {
            t.remove("out");
        }
        toml::to_string(&v).expect("table is serializable")
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// 1-based line of `section.key` (or a top-level key) in TOML text.
fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = match dotted.rsplit_once('.') {
        Some((s, k)) => (Some(s), k),
        None => (None, dotted),
    };
    let mut current: Option<String> = None;
    let mut section_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(name.trim().to_string());
            if section == Some(name.trim()) && section_line.is_none() {
                section_line = Some(i + 1);
            }
            continue;
        }
        let in_scope = current.as_deref() == section;
        let key_here = line
            .split_once('=')
            .map(|(k, _)| k.trim() == key)
            .unwrap_or(false);
        if in_scope && key_here {
            return Some(i + 1);
        }
    }
    // A whole-section problem points at the section header.
    if section.is_none() {
        return text
            .lines()
            .position(|l| l.trim() == format!("[{dotted}]"))
            .map(|i| i + 1);
    }
    section_line
}
