use acs_core::tuner::{auto_tune, TuneOutcome, TunePhase, TunerConfig};
use acs_core::{RngStream, Schedule};
use serde::{Deserialize, Serialize};

use super::{write_json, Ctx};
use crate::config::{start_state, tuner_for, BuiltTarget, StartConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{csv_writer, JSON_FORMAT_VERSION};

/// Child streams of a seed's root generator.
pub const STREAM_START: u64 = 0;
pub const STREAM_TUNE: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub format_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub schedule: Schedule,
    pub alpha_max: f64,
    pub alpha_min: f64,
    pub rho_max: f64,
    pub rho_min: f64,
    pub alpha_max_clamped: bool,
    pub burnin_steps: usize,
    pub tuning_steps: usize,
}

pub fn validated_tuner(ctx: &Ctx, target: &BuiltTarget) -> CliResult<TunerConfig> {
    let tuner = tuner_for(ctx.cfg(), target.as_target());
    tuner.validate().map_err(|e| ctx.loaded.error_at("tuner", e))?;
    Ok(tuner)
}

/// Burn-in and schedule search for one seed.
pub fn tune_seed(tuner: &TunerConfig, target: &BuiltTarget, start: &StartConfig, seed: u64) -> CliResult<TuneOutcome> {
    let root = RngStream::new(seed);
    let s0 = start_state(start, target, &mut root.split(STREAM_START))?;
    Ok(auto_tune(tuner, target.as_target(), &s0, &mut root.split(STREAM_TUNE))?)
}

pub(crate) fn phase_name(p: TunePhase) -> &'static str {
    match p {
        TunePhase::AlphaMax => "alpha_max",
        TunePhase::AlphaMin => "alpha_min",
        TunePhase::Beta => "beta",
    }
}

pub fn run(ctx: &Ctx) -> CliResult<()> {
    let target = ctx.target()?;
    let tuner = validated_tuner(ctx, &target)?;
    let start = ctx.cfg().tune.clone().unwrap_or_default().start;
    let outcomes = ctx.per_seed(|seed| tune_seed(&tuner, &target, &start, seed))?;

    let dir = ctx.dir("")?;
    for (&seed, o) in ctx.seeds().iter().zip(&outcomes) {
        let file = ScheduleFile {
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
        };
        write_json(&dir.join(format!("schedule_seed{seed}.json")), &file)?;
        let mut w = csv_writer(&dir.join(format!("tune_log_seed{seed}.csv")), &ctx.hash, Some(seed))?;
        w.write_record(["phase", "round", "alpha", "beta", "accept", "selected"])?;
        for r in &o.log {
            w.write_record([
                phase_name(r.phase).to_string(),
                r.round.to_string(),
                r.alpha.to_string(),
                r.beta.to_string(),
                r.accept.to_string(),
                (r.selected as u8).to_string(),
            ])?;
        }
        w.flush()?;
        eprintln!(
            "seed {seed}: alpha_max {:.4} alpha_min {:.4} ({} tuning steps)",
            o.alpha_max, o.alpha_min, o.tuning_steps
        );
    }
    ctx.write_run_config("tune")
}

/// Reads a schedule file back, validating the schedule.
pub fn read_schedule_file(path: &std::path::Path) -> CliResult<ScheduleFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}
