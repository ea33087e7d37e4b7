use std::collections::HashSet;
use std::path::Path;

use acs_core::samplers::{block_gibbs_run, run_sampler, RecordConfig, SampleTrace, SamplerSpec};
use acs_core::target::exact_distribution;
use acs_core::{RngStream, State, DEFAULT_ENUMERATION_CAP};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, summarize, write_metrics, write_trace_rows, MetricInputs, SamplerSummary, TraceRow};
use super::tune::{tune_seed, validated_tuner, ScheduleFile};
use super::{write_json, Ctx};
use crate::config::{random_state, start_state, BuiltTarget, GroundTruth, MmdConfig, SampleConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{write_states, JSON_FORMAT_VERSION};

const STREAM_CHAIN_START: u64 = 2;
const STREAM_SAMPLER_BASE: u64 = 16;

pub const GROUND_TRUTH_FILE: &str = "ground_truth.acs1";
pub const INDEX_FILE: &str = "index.json";

/// Lists the trace files of a sample run; lives in `traces/`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceIndex {
    pub format_version: u32,
    pub config_hash: String,
    pub dims: usize,
    pub entries: Vec<TraceEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub label: String,
    pub seed: u64,
    /// CSV of (chain, step, energy, accept_rate), relative to the index.
    pub rows: String,
    /// ACS1 u8 states aligned with `rows`.
    pub states: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub format_version: u32,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub samplers: Vec<SamplerSummary>,
}

/// Draws the reference sample for MMD.
pub fn ground_truth(target: &BuiltTarget, m: &MmdConfig) -> CliResult<Vec<State>> {
    if m.samples == 0 || m.thin == 0 {
        return Err(CliError::Config("metrics.mmd: samples and thin must be positive".into()));
    }
    let t = target.as_target();
    let mut rng = RngStream::new(m.seed);
    match m.ground_truth {
        GroundTruth::BlockGibbs => {
            if t.as_rbm().is_none() {
                return Err(CliError::Config("metrics.mmd: block_gibbs ground truth needs an RBM target".into()));
            }
            let start = random_state(t, &mut rng);
            let trace = block_gibbs_run(t, m.burnin + m.samples * m.thin, start, rng.split(1), RecordConfig::thinned(m.thin))?;
            Ok(trace
                .record_steps
                .iter()
                .zip(trace.states)
                .filter(|(&s, _)| s > m.burnin)
                .map(|(_, x)| x)
                .take(m.samples)
                .collect())
        }
        GroundTruth::Exact => {
            let pi = exact_distribution(t, DEFAULT_ENUMERATION_CAP)?;
            let mut cdf = Vec::with_capacity(pi.len());
            let mut acc = 0.0;
            for p in &pi {
                acc += p;
                cdf.push(acc);
            }
            let space = t.space();
            Ok((0..m.samples)
                .map(|_| {
                    let u = rng.uniform() * acc;
                    let i = cdf.partition_point(|&c| c <= u).min(pi.len() - 1);
                    space.state_at(i)
                })
                .collect())
        }
    }
}

fn trace_rows(chain: usize, t: &SampleTrace) -> Vec<TraceRow> {
    let mut prefix = Vec::with_capacity(t.accepted.len() + 1);
    prefix.push(0usize);
    for &a in &t.accepted {
        prefix.push(prefix.last().unwrap() + a as usize);
    }
    t.record_steps
        .iter()
        .zip(&t.energies)
        .map(|(&step, &energy)| TraceRow {
            chain,
            step,
            energy,
            accept_rate: if step == 0 { 0.0 } else { prefix[step] as f64 / step as f64 },
        })
        .collect()
}

struct SamplerRun {
    rows: Vec<TraceRow>,
    states: Vec<State>,
    tuned: Option<ScheduleFile>,
}

fn check_label(label: &str) -> bool {
    !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

fn validate(ctx: &Ctx, sample: &SampleConfig, target: &BuiltTarget) -> CliResult<()> {
    let l = &ctx.loaded;
    if sample.samplers.is_empty() {
        return Err(l.error_at("sample.samplers", "at least one sampler is required"));
    }
    for (key, v) in [
        ("sample.n_steps", sample.n_steps),
        ("sample.chains", sample.chains),
        ("sample.record_every", sample.record_every),
        ("sample.metrics.every", sample.metrics.every),
    ] {
        if v == 0 {
            return Err(l.error_at(key, "must be positive"));
        }
    }
    let mut labels = HashSet::new();
    for s in &sample.samplers {
        let label = s.label();
        if !check_label(&label) {
            return Err(l.error_at("label", format!("{label:?} must be non-empty ASCII letters, digits, '-', '_' or '.'")));
        }
        if !labels.insert(label.clone()) {
            return Err(l.error_at("sample.samplers", format!("duplicate sampler label {label:?}")));
        }
        if !s.needs_tuning() {
            s.spec(None)?
                .validate(target.as_target())
                .map_err(|e| l.error_at("sample.samplers", format!("{label}: {e}")))?;
        }
    }
    let max_card = target
        .as_target()
        .space()
        .domains()
        .iter()
        .map(|d| d.cardinality())
        .max()
        .unwrap_or(0);
    if max_card > 256 {
        return Err(CliError::Config(format!(
            "state traces are stored as u8; coordinate cardinality {max_card} exceeds 256"
        )));
    }
    Ok(())
}

pub fn run(ctx: &Ctx) -> CliResult<()> {
    let sample = ctx.loaded.section(&ctx.cfg().sample, "sample")?.clone();
    let target = ctx.target()?;
    validate(ctx, &sample, &target)?;
    let tuner = if sample.samplers.iter().any(|s| s.needs_tuning()) {
        Some(validated_tuner(ctx, &target)?)
    } else {
        None
    };
    let gt = match &sample.metrics.mmd {
        Some(m) => Some(ground_truth(&target, m)?),
        None => None,
    };
    let t = target.as_target();
    let record = RecordConfig {
        every: sample.record_every,
        ..RecordConfig::default()
    };

    let runs = ctx.per_seed(|seed| {
        let root = RngStream::new(seed);
        let starts = (0..sample.chains)
            .map(|c| start_state(&sample.start, &target, &mut root.split(STREAM_CHAIN_START).split(c as u64)))
            .collect::<CliResult<Vec<_>>>()?;
        let tuned = match &tuner {
            Some(tc) => Some(tune_seed(tc, &target, &sample.start, seed)?),
            None => None,
        };
        sample
            .samplers
            .iter()
            .enumerate()
            .map(|(k, sc)| {
                let spec: SamplerSpec = sc.spec(tuned.as_ref().map(|o| &o.schedule))?;
                let sampler_rng = root.split(STREAM_SAMPLER_BASE + k as u64);
                let traces = (0..sample.chains)
                    .into_par_iter()
                    .map(|c| run_sampler(&spec, t, sample.n_steps, starts[c].clone(), sampler_rng.split(c as u64), record))
                    .collect::<acs_core::Result<Vec<_>>>()?;
                let mut rows = Vec::new();
                let mut states = Vec::new();
                for (c, tr) in traces.iter().enumerate() {
                    rows.extend(trace_rows(c, tr));
                    states.extend(tr.states.iter().cloned());
                }
                let tuned = match (sc.needs_tuning(), &tuned) {
                    (true, Some(o)) => Some(ScheduleFile {
                        format_version: JSON_FORMAT_VERSION,
                        config_hash: ctx.hash.clone(),
                        seed,
                        schedule: o.schedule.clone(),
                        alpha_max: o.alpha_max,
                        alpha_min: o.alpha_min,
                        rho_max: o.rho_max,
                        rho_min: o.rho_min,
                        alpha_max_clamped: o.alpha_max_clamped,
                        burnin_steps: o.burnin_steps,
                        tuning_steps: o.tuning_steps,
                    }),
                    _ => None,
                };
                Ok(SamplerRun { rows, states, tuned })
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    let traces_dir = ctx.dir("traces")?;
    let metrics_dir = ctx.dir("metrics")?;
    let dims = t.space().dims();
    if let Some(gt) = &gt {
        write_states(&ctx.dir("")?.join(GROUND_TRUTH_FILE), gt, dims)?;
    }
    let inputs = MetricInputs {
        target: &target,
        ground_truth: gt.as_deref(),
        cfg: &sample.metrics,
    };
    let mut index = TraceIndex {
        format_version: JSON_FORMAT_VERSION,
        config_hash: ctx.hash.clone(),
        dims,
        entries: Vec::new(),
    };
    let mut summaries = Vec::new();
    for (k, sc) in sample.samplers.iter().enumerate() {
        let label = sc.label();
        let mut per_seed = Vec::new();
        for (&seed, seed_runs) in ctx.seeds().iter().zip(&runs) {
            let r = &seed_runs[k];
            let stem = format!("{label}_seed{seed}");
            write_trace_rows(&traces_dir.join(format!("{stem}.csv")), &ctx.hash, seed, &r.rows)?;
            write_states(&traces_dir.join(format!("{stem}.acs1")), &r.states, dims)?;
            if let Some(s) = &r.tuned {
                write_json(&traces_dir.join(format!("{stem}_schedule.json")), s)?;
            }
            index.entries.push(TraceEntry {
                label: label.clone(),
                seed,
                rows: format!("{stem}.csv"),
                states: format!("{stem}.acs1"),
            });
            let m = compute_metrics(&r.rows, &r.states, &inputs)?;
            write_metrics(&metrics_dir.join(format!("{stem}.csv")), &ctx.hash, seed, &m)?;
            per_seed.push((seed, m));
        }
        let s = summarize(&label, &per_seed);
        report(&s);
        summaries.push(s);
    }
    write_json(&traces_dir.join(INDEX_FILE), &index)?;
    write_json(
        &ctx.dir("")?.join("summary.json"),
        &SampleSummary {
            format_version: JSON_FORMAT_VERSION,
            config_hash: ctx.hash.clone(),
            seeds: ctx.seeds().to_vec(),
            samplers: summaries,
        },
    )?;
    ctx.write_run_config("sample")
}

pub(crate) fn report(s: &SamplerSummary) {
    let parts: Vec<String> = s
        .metrics
        .iter()
        .map(|(k, v)| format!("{k} {:.4} ± {:.4}", v.mean, v.stderr))
        .collect();
    eprintln!("{}: {}", s.label, parts.join(", "));
}

pub fn read_index(dir: &Path) -> CliResult<TraceIndex> {
    let p = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&p).map_err(|e| {
        CliError::Runtime(format!("{}: {e} (expected the traces directory written by `acs sample`)", p.display()))
    })?;
    Ok(serde_json::from_str(&text)?)
}
