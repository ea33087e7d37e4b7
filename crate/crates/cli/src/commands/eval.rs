use acs_core::eval::{mmd_sq, KernelSpec, MmdEstimator};
use rayon::prelude::*;

use super::metrics::{compute_metrics, read_trace_rows, summarize, write_metrics, MetricInputs, MetricRow};
use super::sample::{read_index, report, SampleSummary, GROUND_TRUTH_FILE};
use super::{thread_pool, write_json, Ctx};
use crate::error::{CliError, CliResult};
use crate::formats::{csv_writer, read_states, JSON_FORMAT_VERSION};

/// Recomputes metrics and the summary from persisted traces.
pub fn run(ctx: &Ctx) -> CliResult<()> {
    let l = &ctx.loaded;
    let ev = l.section(&ctx.cfg().eval, "eval")?;
    let metrics_cfg = ev
        .metrics
        .clone()
        .or_else(|| ctx.cfg().sample.as_ref().map(|s| s.metrics.clone()))
        .unwrap_or_default();
    if metrics_cfg.every == 0 {
        return Err(l.error_at("every", "must be positive"));
    }
    let target = ctx.target()?;
    let traces_dir = l.base_dir.join(&ev.traces_dir);
    let index = read_index(&traces_dir)?;
    if index.dims != target.as_target().space().dims() {
        return Err(CliError::Config(format!(
            "traces have {} coordinates but the target has {}",
            index.dims,
            target.as_target().space().dims()
        )));
    }

    let gt = match &metrics_cfg.mmd {
        Some(_) => {
            let path = match &ev.ground_truth {
                Some(p) => l.base_dir.join(p),
                None => traces_dir.parent().unwrap_or(&traces_dir).join(GROUND_TRUTH_FILE),
            };
            if !path.is_file() {
                return Err(CliError::Config(format!(
                    "ground-truth file {} not found; MMD needs the reference sample written by `acs sample` \
                     (set eval.ground_truth or drop metrics.mmd)",
                    path.display()
                )));
            }
            Some(read_states(&path)?)
        }
        None => None,
    };

    let mut labels: Vec<String> = Vec::new();
    for e in &index.entries {
        if !labels.contains(&e.label) {
            labels.push(e.label.clone());
        }
    }
    if let Some(wanted) = &ev.samplers {
        if let Some(missing) = wanted.iter().find(|w| !labels.contains(w)) {
            return Err(l.error_at("eval.samplers", format!("no traces for sampler {missing:?}")));
        }
        labels.retain(|x| wanted.contains(x));
    }
    let entries: Vec<_> = index.entries.iter().filter(|e| labels.contains(&e.label)).collect();

    let inputs = MetricInputs {
        target: &target,
        ground_truth: gt.as_deref(),
        cfg: &metrics_cfg,
    };
    let kernel = KernelSpec::new(metrics_cfg.mmd.as_ref().map_or(1.0, |m| m.bandwidth))?;
    let computed: Vec<(Vec<MetricRow>, f64)> = thread_pool()?.install(|| {
        entries
            .par_iter()
            .map(|e| {
                let rows = read_trace_rows(&traces_dir.join(&e.rows))?;
                let states = read_states(&traces_dir.join(&e.states))?;
                let m = compute_metrics(&rows, &states, &inputs)?;
                let last = rows.iter().map(|r| r.step).max().unwrap_or(0);
                let tail: Vec<_> = rows
                    .iter()
                    .zip(&states)
                    .filter(|(r, _)| r.step * 2 > last)
                    .map(|(_, s)| s.clone())
                    .collect();
                let self_mmd = if tail.is_empty() {
                    0.0
                } else {
                    mmd_sq(&tail, &tail, &kernel, MmdEstimator::Biased)?
                };
                Ok((m, self_mmd))
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    let metrics_dir = ctx.dir("metrics")?;
    let mut checks = csv_writer(&ctx.dir("")?.join("checks.csv"), &ctx.hash, None)?;
    checks.write_record(["label", "seed", "check", "value"])?;
    if let Some(gt) = &gt {
        let v = mmd_sq(gt, gt, &kernel, MmdEstimator::Biased)?;
        checks.write_record(["ground_truth", "", "mmd_self", &v.to_string()])?;
    }
    let mut seeds: Vec<u64> = Vec::new();
    let mut summaries = Vec::new();
    for label in &labels {
        let mut per_seed = Vec::new();
        for (e, (m, self_mmd)) in entries.iter().zip(&computed).filter(|(e, _)| &e.label == label) {
            write_metrics(&metrics_dir.join(format!("{}_seed{}.csv", e.label, e.seed)), &ctx.hash, e.seed, m)?;
            checks.write_record([label.as_str(), &e.seed.to_string(), "mmd_self", &self_mmd.to_string()])?;
            if !seeds.contains(&e.seed) {
                seeds.push(e.seed);
            }
            per_seed.push((e.seed, m.clone()));
        }
        let s = summarize(label, &per_seed);
        report(&s);
        summaries.push(s);
    }
    checks.flush()?;
    write_json(
        &ctx.dir("")?.join("summary.json"),
        &SampleSummary {
            format_version: JSON_FORMAT_VERSION,
            config_hash: index.config_hash.clone(),
            seeds,
            samplers: summaries,
        },
    )?;
    ctx.write_run_config("eval")
}
