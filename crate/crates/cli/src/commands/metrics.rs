//! Metric rows and per-sampler summaries computed from recorded traces.
//!
//! `acs sample` and `acs eval` both go through [`compute_metrics`] and
//! [`summarize`], which is what makes eval reproduce the sample summary.

use std::collections::BTreeMap;
use std::path::Path;

use acs_core::eval::{empirical_kl, mmd_sq, mode_coverage, KernelSpec, MmdEstimator};
use acs_core::{State, DEFAULT_ENUMERATION_CAP};
use serde::{Deserialize, Serialize};

use super::{opt_cell, SeedStat};
use crate::config::{BuiltTarget, MetricsConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{csv_writer, read_csv};

/// One recorded state of one chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub chain: usize,
    pub step: usize,
    pub energy: f64,
    /// Acceptance rate of the chain over steps 1..=step.
    pub accept_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub step: usize,
    /// Means over the chains recorded at this step.
    pub energy: f64,
    pub accept_rate: f64,
    pub mmd: Option<f64>,
    pub kl: Option<f64>,
    pub modes_visited: Option<usize>,
}

pub struct MetricInputs<'a> {
    pub target: &'a BuiltTarget,
    pub ground_truth: Option<&'a [State]>,
    pub cfg: &'a MetricsConfig,
}

/// Evenly spaced subset of at most `cap` items.
fn thin_to<T: Clone>(xs: &[T], cap: usize) -> Vec<T> {
    if xs.len() <= cap || cap == 0 {
        return xs.to_vec();
    }
    (0..cap).map(|i| xs[i * xs.len() / cap].clone()).collect()
}

/// States recorded with step in (t/2, t].
fn window(rows: &[TraceRow], states: &[State], t: usize) -> Vec<State> {
    rows.iter()
        .zip(states)
        .filter(|(r, _)| r.step * 2 > t && r.step <= t)
        .map(|(_, s)| s.clone())
        .collect()
}

pub fn compute_metrics(rows: &[TraceRow], states: &[State], inp: &MetricInputs) -> CliResult<Vec<MetricRow>> {
    if rows.len() != states.len() {
        return Err(CliError::Runtime(format!(
            "trace has {} rows but {} states",
            rows.len(),
            states.len()
        )));
    }
    let mut by_step: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = by_step.entry(r.step).or_insert((0.0, 0.0, 0));
        e.0 += r.energy;
        e.1 += r.accept_rate;
        e.2 += 1;
    }
    let last = by_step.keys().next_back().copied().unwrap_or(0);
    let first_visits = inp.target.modes().map(|modes| {
        let steps: Vec<usize> = rows.iter().map(|r| r.step).collect();
        mode_coverage(states, &steps, modes, inp.cfg.mode_radius).first_visit
    });
    let kernel = match &inp.cfg.mmd {
        Some(m) => Some(KernelSpec::new(m.bandwidth)?),
        None => None,
    };
    let mut out = Vec::with_capacity(by_step.len());
    for (&step, &(e, a, n)) in &by_step {
        let checkpoint = step % inp.cfg.every == 0 || step == last;
        let win = if checkpoint && (kernel.is_some() || inp.cfg.kl) {
            window(rows, states, step)
        } else {
            Vec::new()
        };
        let mmd = match (&kernel, inp.ground_truth, &inp.cfg.mmd) {
            (Some(k), Some(gt), Some(m)) if checkpoint && !win.is_empty() => {
                Some(mmd_sq(&thin_to(&win, m.samples), gt, k, MmdEstimator::Biased)?)
            }
            _ => None,
        };
        let kl = if inp.cfg.kl && checkpoint && !win.is_empty() {
            Some(empirical_kl(&win, inp.target.as_target(), inp.cfg.kl_smoothing, DEFAULT_ENUMERATION_CAP)?)
        } else {
            None
        };
        let modes_visited = first_visits
            .as_ref()
            .map(|fv| fv.iter().filter(|v| v.is_some_and(|s| s <= step)).count());
        out.push(MetricRow {
            step,
            energy: e / n as f64,
            accept_rate: a / n as f64,
            mmd,
            kl,
            modes_visited,
        });
    }
    Ok(out)
}

pub fn write_metrics(path: &Path, hash: &str, seed: u64, rows: &[MetricRow]) -> CliResult<()> {
    let mut w = csv_writer(path, hash, Some(seed))?;
    w.write_record(["step", "energy", "accept_rate", "mmd", "kl", "modes_visited"])?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.energy.to_string(),
            r.accept_rate.to_string(),
            opt_cell(r.mmd),
            opt_cell(r.kl),
            r.modes_visited.map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_rows(path: &Path, hash: &str, seed: u64, rows: &[TraceRow]) -> CliResult<()> {
    let mut w = csv_writer(path, hash, Some(seed))?;
    w.write_record(["chain", "step", "energy", "accept_rate"])?;
    for r in rows {
        w.write_record([
            r.chain.to_string(),
            r.step.to_string(),
            r.energy.to_string(),
            r.accept_rate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_rows(path: &Path) -> CliResult<Vec<TraceRow>> {
    let t = read_csv(path)?;
    let (c, s, e, a) = (t.column("chain")?, t.column("step")?, t.column("energy")?, t.column("accept_rate")?);
    let bad = |v: &str| CliError::Runtime(format!("{}: bad number {v:?}", path.display()));
    t.rows
        .iter()
        .map(|r| {
            Ok(TraceRow {
                chain: r[c].parse().map_err(|_| bad(&r[c]))?,
                step: r[s].parse().map_err(|_| bad(&r[s]))?,
                energy: r[e].parse().map_err(|_| bad(&r[e]))?,
                accept_rate: r[a].parse().map_err(|_| bad(&r[a]))?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSummary {
    pub label: String,
    /// Metric name to its cross-seed statistics, from each seed's last row.
    pub metrics: BTreeMap<String, SeedStat>,
}

/// `runs` holds (seed, metric rows) per seed, in seed order.
pub fn summarize(label: &str, runs: &[(u64, Vec<MetricRow>)]) -> SamplerSummary {
    let finals: Vec<&MetricRow> = runs.iter().filter_map(|(_, r)| r.last()).collect();
    let mut metrics = BTreeMap::new();
    let mut put = |name: &str, vals: Vec<Option<f64>>| {
        if !vals.is_empty() && vals.iter().all(Option::is_some) {
            metrics.insert(name.to_string(), SeedStat::new(vals.into_iter().flatten().collect()));
        }
    };
    put("final_energy", finals.iter().map(|r| Some(r.energy)).collect());
    put("accept_rate", finals.iter().map(|r| Some(r.accept_rate)).collect());
    put("final_mmd", finals.iter().map(|r| r.mmd).collect());
    put("final_kl", finals.iter().map(|r| r.kl).collect());
    put("modes_visited", finals.iter().map(|r| r.modes_visited.map(|m| m as f64)).collect());
    SamplerSummary {
        label: label.to_string(),
        metrics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_cap() {
        let xs: Vec<usize> = (0..10).collect();
        assert_eq!(thin_to(&xs, 4), vec![0, 2, 5, 7]);
        assert_eq!(thin_to(&xs, 20).len(), 10);
    }

    #[test]
    fn summary_skips_partial_metrics() {
        let row = |mmd| MetricRow {
            step: 1,
            energy: 1.0,
            accept_rate: 0.5,
            mmd,
            kl: None,
            modes_visited: None,
        };
        let s = summarize("x", &[(0, vec![row(Some(0.1))]), (1, vec![row(None)])]);
        assert!(s.metrics.contains_key("final_energy"));
        assert!(!s.metrics.contains_key("final_mmd"));
        assert_eq!(s.metrics["accept_rate"].n, 2);
    }
}
