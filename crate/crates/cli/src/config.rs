//! TOML run configuration.
//!
//! Top-level keys: `seeds`, `out`, and the tables `[target]`, `[tuner]`,
//! `[tune]`, `[sample]`, `[learn]`, `[theory]`, `[eval]`. Each subcommand reads
//! the tables it needs; unknown keys are rejected.

use std::path::{Path, PathBuf};

use acs_core::learning::PcdConfig;
use acs_core::samplers::SamplerSpec;
use acs_core::targets::{sample_rbm_scaled, QuadraticTarget, RbmModel, SyntheticMultimodal};
use acs_core::tuner::TunerConfig;
use acs_core::{CosineConvention, RngStream, Schedule, State, Target};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::formats::{read_model, sha256_hex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub target: Option<TargetConfig>,
    pub tuner: Option<TunerConfig>,
    pub tune: Option<TuneConfig>,
    pub sample: Option<SampleConfig>,
    pub learn: Option<LearnConfig>,
    pub theory: Option<TheoryConfig>,
    pub eval: Option<EvalConfig>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_out() -> PathBuf {
    PathBuf::from("acs-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    SyntheticGrid {
        num_modes: usize,
        spacing: f64,
        sigma_sq: f64,
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default)]
        literal_sign: bool,
    },
    Synthetic {
        modes: Vec<Vec<f64>>,
        sigma_sq: f64,
        max_value: u32,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    RbmRandom {
        n_visible: usize,
        n_hidden: usize,
        #[serde(default = "default_weight_std")]
        weight_std: f64,
        #[serde(default = "default_bias_std")]
        bias_std: f64,
        /// Seed of the model draw, independent of the run seeds.
        #[serde(default)]
        model_seed: u64,
    },
    RbmFile {
        path: PathBuf,
    },
    Quadratic {
        center: Vec<f64>,
        /// Row-major; defaults to `curvature · I`.
        #[serde(default)]
        hessian: Option<Vec<f64>>,
        #[serde(default)]
        curvature: Option<f64>,
        max_value: u32,
    },
}

fn default_weight_std() -> f64 {
    0.2
}

fn default_bias_std() -> f64 {
    0.1
}

pub enum BuiltTarget {
    Synthetic(SyntheticMultimodal),
    Rbm(RbmModel),
    Quadratic(QuadraticTarget),
}

impl BuiltTarget {
    pub fn as_target(&self) -> &dyn Target {
        match self {
            BuiltTarget::Synthetic(t) => t,
            BuiltTarget::Rbm(t) => t,
            BuiltTarget::Quadratic(t) => t,
        }
    }

    pub fn modes(&self) -> Option<&[Vec<f64>]> {
        match self {
            BuiltTarget::Synthetic(t) => Some(t.modes()),
            _ => None,
        }
    }
}

impl TargetConfig {
    pub fn build(&self, base_dir: &Path) -> CliResult<BuiltTarget> {
        let cfg_err = |e: acs_core::AcsError| CliError::Config(format!("[target]: {e}"));
        Ok(match self {
            TargetConfig::SyntheticGrid {
                num_modes,
                spacing,
                sigma_sq,
                weights,
                literal_sign,
            } => {
                let (modes, max) = acs_core::targets::build_grid_modes(*num_modes, *spacing).map_err(cfg_err)?;
                BuiltTarget::Synthetic(
                    SyntheticMultimodal::new(modes, *sigma_sq, weights.clone(), max)
                        .map_err(cfg_err)?
                        .with_literal_sign(*literal_sign),
                )
            }
            TargetConfig::Synthetic {
                modes,
                sigma_sq,
                max_value,
                weights,
            } => BuiltTarget::Synthetic(
                SyntheticMultimodal::new(modes.clone(), *sigma_sq, weights.clone(), *max_value).map_err(cfg_err)?,
            ),
            TargetConfig::RbmRandom {
                n_visible,
                n_hidden,
                weight_std,
                bias_std,
                model_seed,
            } => BuiltTarget::Rbm(
                sample_rbm_scaled(*n_visible, *n_hidden, *weight_std, *bias_std, &mut RngStream::new(*model_seed))
                    .map_err(cfg_err)?,
            ),
            TargetConfig::RbmFile { path } => BuiltTarget::Rbm(read_model(&base_dir.join(path))?),
            TargetConfig::Quadratic {
                center,
                hessian,
                curvature,
                max_value,
            } => BuiltTarget::Quadratic(build_quadratic(center, hessian.as_deref(), *curvature, *max_value)?),
        })
    }
}

pub fn build_quadratic(
    center: &[f64],
    hessian: Option<&[f64]>,
    curvature: Option<f64>,
    max_value: u32,
) -> CliResult<QuadraticTarget> {
    let r = match (hessian, curvature) {
        (Some(h), None) => QuadraticTarget::new(center.to_vec(), h.to_vec(), max_value),
        (None, Some(c)) => QuadraticTarget::isotropic(center.to_vec(), c, max_value),
        _ => return Err(CliError::Config("quadratic target needs exactly one of hessian or curvature".into())),
    };
    r.map_err(|e| CliError::Config(format!("quadratic target: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerConfig {
    /// Cosine step sizes with a linear β ramp from `beta_max` to `beta_min`.
    Acs {
        alpha_max: f64,
        alpha_min: f64,
        #[serde(default = "default_s")]
        steps_per_cycle: usize,
        #[serde(default = "half")]
        beta_max: f64,
        #[serde(default = "half")]
        beta_min: f64,
        #[serde(default)]
        convention: CosineConvention,
        #[serde(default)]
        label: Option<String>,
    },
    AcsSchedule {
        alphas: Vec<f64>,
        betas: Vec<f64>,
        #[serde(default)]
        label: Option<String>,
    },
    /// Schedule from the automatic tuner (the `[tuner]` table), per seed.
    AcsTuned {
        #[serde(default)]
        label: Option<String>,
    },
    Dmala {
        alpha: f64,
        #[serde(default)]
        label: Option<String>,
    },
    Fixed {
        alpha: f64,
        beta: f64,
        #[serde(default)]
        label: Option<String>,
    },
    RandomWalk {
        #[serde(default)]
        label: Option<String>,
    },
    SingleFlip {
        #[serde(default = "one")]
        temp: f64,
        #[serde(default)]
        label: Option<String>,
    },
    BlockGibbs {
        #[serde(default)]
        label: Option<String>,
    },
}

fn default_s() -> usize {
    20
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl SamplerConfig {
    pub fn label(&self) -> String {
        let (label, kind) = match self {
            SamplerConfig::Acs { label, .. } => (label, "acs"),
            SamplerConfig::AcsSchedule { label, .. } => (label, "acs_schedule"),
            SamplerConfig::AcsTuned { label } => (label, "acs_tuned"),
            SamplerConfig::Dmala { label, .. } => (label, "dmala"),
            SamplerConfig::Fixed { label, .. } => (label, "fixed"),
            SamplerConfig::RandomWalk { label } => (label, "random_walk"),
            SamplerConfig::SingleFlip { label, .. } => (label, "single_flip"),
            SamplerConfig::BlockGibbs { label } => (label, "block_gibbs"),
        };
        label.clone().unwrap_or_else(|| kind.to_string())
    }

    pub fn needs_tuning(&self) -> bool {
        matches!(self, SamplerConfig::AcsTuned { .. })
    }

    /// The core sampler; `tuned` supplies the schedule for `acs_tuned`.
    pub fn spec(&self, tuned: Option<&Schedule>) -> CliResult<SamplerSpec> {
        let cfg = |e: acs_core::AcsError| CliError::Config(format!("sampler {}: {e}", self.label()));
        Ok(match self {
            SamplerConfig::Acs {
                alpha_max,
                alpha_min,
                steps_per_cycle,
                beta_max,
                beta_min,
                convention,
                ..
            } => {
                let betas = acs_core::schedule::naive_beta_schedule(*steps_per_cycle, *beta_max, *beta_min).map_err(cfg)?;
                SamplerSpec::Acs {
                    schedule: Schedule::cyclical(*alpha_max, *alpha_min, betas, *convention).map_err(cfg)?,
                }
            }
            SamplerConfig::AcsSchedule { alphas, betas, .. } => SamplerSpec::Acs {
                schedule: Schedule::new(alphas.clone(), betas.clone()).map_err(cfg)?,
            },
            SamplerConfig::AcsTuned { .. } => SamplerSpec::Acs {
                schedule: tuned
                    .cloned()
                    .ok_or_else(|| CliError::Runtime("acs_tuned sampler used before tuning".into()))?,
            },
            SamplerConfig::Dmala { alpha, .. } => SamplerSpec::Dmala { alpha: *alpha },
            SamplerConfig::Fixed { alpha, beta, .. } => SamplerSpec::Fixed {
                alpha: *alpha,
                beta: *beta,
            },
            SamplerConfig::RandomWalk { .. } => SamplerSpec::RandomWalk,
            SamplerConfig::SingleFlip { temp, .. } => SamplerSpec::SingleFlip { temp: *temp },
            SamplerConfig::BlockGibbs { .. } => SamplerSpec::BlockGibbs,
        })
    }
}

/// `start = "origin" | "random" | "mode"` or `start = { state = [...] }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartConfig {
    Named(StartKind),
    State { state: Vec<u32> },
}

impl Default for StartConfig {
    fn default() -> Self {
        StartConfig::Named(StartKind::Origin)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// All coordinates at 0.
    Origin,
    /// Uniform over the space, drawn per chain.
    Random,
    /// Greedy ascent from mode hints (synthetic modes, or random states).
    Mode,
}

impl StartConfig {
    pub fn kind(&self) -> StartConfigRef<'_> {
        match self {
            StartConfig::Named(k) => StartConfigRef::Kind(*k),
            StartConfig::State { state } => StartConfigRef::State(state),
        }
    }
}

pub enum StartConfigRef<'a> {
    Kind(StartKind),
    State(&'a [u32]),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    #[serde(default)]
    pub start: StartConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub samplers: Vec<SamplerConfig>,
    pub n_steps: usize,
    #[serde(default = "one_usize")]
    pub chains: usize,
    #[serde(default)]
    pub start: StartConfig,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

fn one_usize() -> usize {
    1
}

/// Metrics at step t use the records with step in (t/2, t], pooled over
/// chains; mode visits are cumulative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Steps between metric checkpoints.
    pub every: usize,
    pub mmd: Option<MmdConfig>,
    /// Empirical KL over the window (enumerable targets only).
    pub kl: bool,
    pub kl_smoothing: f64,
    /// L∞ radius for mode visits on synthetic targets.
    pub mode_radius: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            every: 100,
            mmd: None,
            kl: false,
            kl_smoothing: acs_core::eval::DEFAULT_KL_SMOOTHING,
            mode_radius: 5.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    /// Thinned Block Gibbs chain (RBM targets).
    BlockGibbs,
    /// Inverse-CDF draws over the enumerated space.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmdConfig {
    pub ground_truth: GroundTruth,
    pub samples: usize,
    pub burnin: usize,
    pub thin: usize,
    pub bandwidth: f64,
    /// Seed of the ground-truth draw, shared by every run seed.
    pub seed: u64,
}

impl Default for MmdConfig {
    fn default() -> Self {
        Self {
            ground_truth: GroundTruth::BlockGibbs,
            samples: 1000,
            burnin: 1000,
            thin: 10,
            bandwidth: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    TwoCluster {
        n_visible: usize,
        n_train: usize,
        n_test: usize,
        #[serde(default = "default_flip")]
        flip_prob: f64,
        #[serde(default)]
        data_seed: u64,
    },
    /// ACS1 u8 matrices, one example per row.
    File { train: PathBuf, test: Option<PathBuf> },
}

fn default_flip() -> f64 {
    0.05
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnMethod {
    #[default]
    Pcd,
    AcsPcd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfig {
    pub data: DataConfig,
    pub n_hidden: usize,
    #[serde(default)]
    pub method: LearnMethod,
    /// Negative-phase sampler for `pcd`.
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
    #[serde(default = "default_init_std")]
    pub init_weight_std: f64,
    #[serde(default)]
    pub pcd: PcdConfig,
    #[serde(default)]
    pub evaluation: LearnEvalConfig,
}

fn default_init_std() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnEvalConfig {
    /// Exact log-likelihood when the smaller layer has at most this many units.
    pub max_enumerated_units: usize,
    pub ais: Option<AisConfig>,
}

impl Default for LearnEvalConfig {
    fn default() -> Self {
        Self {
            max_enumerated_units: 20,
            ais: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AisConfig {
    pub n_temps: usize,
    pub steps_per_temp: usize,
    pub n_particles: usize,
}

impl Default for AisConfig {
    fn default() -> Self {
        Self {
            n_temps: 1000,
            steps_per_temp: 1,
            n_particles: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub center: Vec<f64>,
    #[serde(default)]
    pub hessian: Option<Vec<f64>>,
    #[serde(default)]
    pub curvature: Option<f64>,
    pub max_value: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSpec {
    pub alpha_max: f64,
    pub alpha_min: f64,
    pub betas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryConfig {
    pub targets: Vec<QuadraticSpec>,
    /// Explicit (α, β) pairs; when empty, α = frac/(βM) over `fractions` × `betas`.
    pub pairs: Vec<[f64; 2]>,
    pub fractions: Vec<f64>,
    pub betas: Vec<f64>,
    pub cycles: Vec<CycleSpec>,
    pub n_max: usize,
    /// Also check the uncorrected proposal kernel as if it were exact; it must fail.
    pub negative_control: bool,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            targets: vec![
                QuadraticSpec {
                    center: vec![3.4],
                    hessian: None,
                    curvature: Some(0.6),
                    max_value: 8,
                },
                QuadraticSpec {
                    center: vec![2.3, 3.6],
                    hessian: Some(vec![0.5, 0.15, 0.15, 0.35]),
                    curvature: None,
                    max_value: 6,
                },
            ],
            pairs: Vec::new(),
            fractions: vec![0.1, 0.35, 0.65, 0.95],
            betas: vec![0.5, 0.7, 0.9],
            cycles: Vec::new(),
            n_max: 200,
            negative_control: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Directory holding the traces written by `acs sample`.
    pub traces_dir: PathBuf,
    /// Labels to evaluate; all by default.
    #[serde(default)]
    pub samplers: Option<Vec<String>>,
    /// Defaults to `[sample.metrics]`, which reproduces the sample summary.
    #[serde(default)]
    pub metrics: Option<MetricsConfig>,
    /// Ground-truth states (ACS1), used when `metrics.mmd` is set. Defaults to
    /// the file `acs sample` writes next to the traces directory.
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
}

/// A parsed config with the source text kept for error locations.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub source: String,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        // the first parse reports errors with line numbers; the second sees the filled-in tuner tables
        toml::from_str::<RunConfig>(&source).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut table: toml::Table =
            toml::from_str(&source).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        fill_tuner_defaults(&mut table)?;
        let config: RunConfig = table
            .try_into()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(Self {
            config,
            source,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    /// Config error pointing at the first line that sets `key`.
    pub fn error_at(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        match line_of(&self.source, key) {
            Some(line) => CliError::Config(format!("line {line}: {key}: {msg}")),
            None => CliError::Config(format!("{key}: {msg}")),
        }
    }

    pub fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> CliResult<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("config has no [{name}] table")))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.config.out)
    }
}

fn is_binary_target(table: &toml::Table) -> bool {
    let kind = table
        .get("target")
        .and_then(|t| t.get("kind"))
        .and_then(|k| k.as_str());
    matches!(kind, Some("rbm_random" | "rbm_file"))
}

/// Completes a partial tuner table from the defaults for its space kind.
fn merge_tuner(partial: &toml::Value, defaults: TunerConfig, key: &str) -> CliResult<toml::Value> {
    let toml::Value::Table(mut base) = toml::Value::try_from(defaults).expect("tuner config serializes") else {
        unreachable!("tuner config is a table")
    };
    let partial = partial
        .as_table()
        .ok_or_else(|| CliError::Config(format!("[{key}] must be a table")))?;
    for (k, v) in partial {
        if !base.contains_key(k) {
            return Err(CliError::Config(format!("[{key}]: unknown key `{k}`")));
        }
        base.insert(k.clone(), v.clone());
    }
    Ok(toml::Value::Table(base))
}

/// The top-level `[tuner]` defaults to binary or ordinal settings by target
/// kind; `[learn.pcd.tuner]` always starts from the binary settings.
fn fill_tuner_defaults(table: &mut toml::Table) -> CliResult<()> {
    let defaults = if is_binary_target(table) {
        TunerConfig::binary()
    } else {
        TunerConfig::ordinal()
    };
    if let Some(t) = table.get("tuner") {
        let merged = merge_tuner(t, defaults, "tuner")?;
        table.insert("tuner".into(), merged);
    }
    let pcd = table
        .get_mut("learn")
        .and_then(|l| l.get_mut("pcd"))
        .and_then(|p| p.as_table_mut());
    if let Some(pcd) = pcd {
        if let Some(t) = pcd.get("tuner") {
            let merged = merge_tuner(t, TunerConfig::binary(), "learn.pcd.tuner")?;
            pcd.insert("tuner".into(), merged);
        }
    }
    Ok(())
}

/// 1-based line of the first `key = ...` or `[key]` line.
pub fn line_of(source: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    source.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(leaf)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
            || t.trim_matches(|c| c == '[' || c == ']') == key
    })
    .map(|i| i + 1)
}

/// SHA-256 over the canonical JSON of the config, ignoring the output path.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.out = PathBuf::new();
    sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
}

/// Tuner settings: the `[tuner]` table, else defaults for the space kind.
pub fn tuner_for(cfg: &RunConfig, target: &dyn Target) -> TunerConfig {
    cfg.tuner.clone().unwrap_or_else(|| {
        if target.space().is_binary() {
            TunerConfig::binary()
        } else {
            TunerConfig::ordinal()
        }
    })
}

pub fn start_state(start: &StartConfig, target: &BuiltTarget, rng: &mut RngStream) -> CliResult<State> {
    let t = target.as_target();
    let space = t.space();
    let s = match start.kind() {
        StartConfigRef::State(v) => {
            let s = State::new(v.to_vec());
            space
                .validate(&s)
                .map_err(|e| CliError::Config(format!("start state: {e}")))?;
            s
        }
        StartConfigRef::Kind(StartKind::Origin) => space.origin(),
        StartConfigRef::Kind(StartKind::Random) => random_state(t, rng),
        StartConfigRef::Kind(StartKind::Mode) => {
            let hints: Vec<State> = match target.modes() {
                Some(m) => m
                    .iter()
                    .map(|mu| State::new(mu.iter().map(|c| c.round() as u32).collect()))
                    .collect(),
                None => (0..8).map(|_| random_state(t, rng)).collect(),
            };
            let mut best: Option<(State, f64)> = None;
            for h in hints {
                let top = acs_core::samplers::greedy_ascent(t, &h);
                let u = t.energy(&top);
                if best.as_ref().map_or(true, |b| u > b.1) {
                    best = Some((top, u));
                }
            }
            best.expect("at least one hint").0
        }
    };
    Ok(s)
}

pub fn random_state(t: &dyn Target, rng: &mut RngStream) -> State {
    State::new(
        t.space()
            .domains()
            .iter()
            .map(|d| rng.index(d.cardinality()) as u32)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_sample_config() {
        let src = r#"
seeds = [1, 2]
[target]
kind = "synthetic_grid"
num_modes = 4
spacing = 10.0
sigma_sq = 2.0

[sample]
n_steps = 10
start = "mode"
samplers = [{ kind = "dmala", alpha = 1.0 }, { kind = "acs", alpha_max = 50.0, alpha_min = 1.0 }]
"#;
        let cfg: RunConfig = toml::from_str(src).unwrap();
        let s = cfg.sample.unwrap();
        assert_eq!(s.samplers.len(), 2);
        assert_eq!(s.start, StartConfig::Named(StartKind::Mode));
        assert_eq!(s.samplers[1].label(), "acs");
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let src = "seeds = [1]\nbogus = 3\n";
        let err = toml::from_str::<RunConfig>(src).unwrap_err().to_string();
        assert!(err.contains("line 2") || err.contains("bogus"), "{err}");
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a: RunConfig = toml::from_str("seeds = [3]").unwrap();
        let h = config_hash(&a);
        a.out = PathBuf::from("elsewhere");
        assert_eq!(config_hash(&a), h);
        a.seeds = vec![4];
        assert_ne!(config_hash(&a), h);
    }

    #[test]
    fn partial_tuner_tables_start_from_space_defaults() {
        let dir = std::env::temp_dir().join(format!("acs-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.toml");
        std::fs::write(
            &p,
            "[target]\nkind = \"rbm_random\"\nn_visible = 4\nn_hidden = 2\n[tuner]\nbudget = 50\n",
        )
        .unwrap();
        let t = LoadedConfig::load(&p).unwrap().config.tuner.unwrap();
        assert_eq!(t.budget, 50);
        assert_eq!(t.alpha_ceil, TunerConfig::binary().alpha_ceil);
        std::fs::write(&p, "[tuner]\nbudgte = 50\n").unwrap();
        assert!(LoadedConfig::load(&p).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn line_lookup() {
        let src = "[sample]\nn_steps = 3\nsamplers = []\n";
        assert_eq!(line_of(src, "sample.samplers"), Some(3));
        assert_eq!(line_of(src, "sample"), Some(1));
    }
}
