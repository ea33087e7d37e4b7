//! Subcommand implementations and the plumbing they share.

pub mod eval;
pub mod learn;
pub mod metrics;
pub mod sample;
pub mod theory;
pub mod tune;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{config_hash, BuiltTarget, LoadedConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::formats::JSON_FORMAT_VERSION;

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "ACS_THREADS";

/// Arguments every subcommand accepts.
#[derive(Clone, Debug, clap::Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Run this seed only, replacing the configured list.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, replacing `out` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A loaded config with its hash and output directory.
pub struct Ctx {
    pub loaded: LoadedConfig,
    pub hash: String,
    pub out_dir: PathBuf,
}

impl Ctx {
    pub fn new(args: &CommonArgs) -> CliResult<Self> {
        let mut loaded = LoadedConfig::load(&args.config)?;
        if let Some(s) = args.seed {
            loaded.config.seeds = vec![s];
        }
        if loaded.config.seeds.is_empty() {
            return Err(loaded.error_at("seeds", "at least one seed is required"));
        }
        let mut seen = loaded.config.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != loaded.config.seeds.len() {
            return Err(loaded.error_at("seeds", "seeds must be distinct"));
        }
        let out_dir = args.out.clone().unwrap_or_else(|| loaded.output_dir());
        let hash = config_hash(&loaded.config);
        Ok(Self { loaded, hash, out_dir })
    }

    pub fn cfg(&self) -> &RunConfig {
        &self.loaded.config
    }

    pub fn seeds(&self) -> &[u64] {
        &self.loaded.config.seeds
    }

    pub fn target(&self) -> CliResult<BuiltTarget> {
        self.loaded
            .section(&self.cfg().target, "target")?
            .build(&self.loaded.base_dir)
    }

    /// Creates `out_dir/sub` and returns it.
    pub fn dir(&self, sub: &str) -> CliResult<PathBuf> {
        let d = if sub.is_empty() { self.out_dir.clone() } else { self.out_dir.join(sub) };
        fs::create_dir_all(&d).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", d.display())))?;
        Ok(d)
    }

    pub fn write_run_config(&self, command: &str) -> CliResult<()> {
        #[derive(Serialize)]
        struct RunRecord<'a> {
            format_version: u32,
            command: &'a str,
            config_hash: &'a str,
            seeds: &'a [u64],
            config: &'a RunConfig,
        }
        write_json(
            &self.dir("")?.join("run_config.json"),
            &RunRecord {
                format_version: JSON_FORMAT_VERSION,
                command,
                config_hash: &self.hash,
                seeds: self.seeds(),
                config: self.cfg(),
            },
        )
    }

    /// Runs `f` for every seed on the worker pool; results keep seed order.
    pub fn per_seed<R: Send>(&self, f: impl Fn(u64) -> CliResult<R> + Sync) -> CliResult<Vec<R>> {
        let pool = thread_pool()?;
        pool.install(|| self.seeds().par_iter().map(|&s| f(s)).collect())
    }
}

pub fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Mean and standard error across seeds.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SeedStat {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation over √n; 0 for a single seed.
    pub stderr: f64,
    pub per_seed: Vec<f64>,
}

impl SeedStat {
    pub fn new(values: Vec<f64>) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            n,
            mean,
            stderr,
            per_seed: values,
        }
    }
}

/// Formats an optional float for CSV; empty when absent.
pub(crate) fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
