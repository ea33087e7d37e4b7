//! Exact-kernel verification on small quadratic targets.

use acs_core::proposal::ProposalParams;
use acs_core::schedule::naive_beta_schedule;
use acs_core::target::exact_distribution;
use acs_core::targets::QuadraticTarget;
use acs_core::theory::{analyze_cycle, analyze_kernel, check_stationarity, proposal_only_kernel, CycleReport, KernelReport};
use acs_core::{CosineConvention, Schedule, DEFAULT_ENUMERATION_CAP};
use serde::Serialize;

use super::{write_json, Ctx};
use crate::config::{build_quadratic, QuadraticSpec, TheoryConfig};
use crate::error::{CliError, CliResult};
use crate::formats::JSON_FORMAT_VERSION;

/// Residual tolerances for row sums, stationarity and detailed balance.
pub const ROW_TOL: f64 = 1e-12;
pub const BALANCE_TOL: f64 = 1e-10;
/// Slack allowed when comparing a TV curve to its geometric bound.
pub const BOUND_TOL: f64 = 1e-12;

#[derive(Serialize)]
struct KernelEntry {
    target: usize,
    report: KernelReport,
    failures: Vec<String>,
}

#[derive(Serialize)]
struct CycleEntry {
    target: usize,
    report: CycleReport,
    failures: Vec<String>,
}

#[derive(Serialize)]
struct NegativeControl {
    target: usize,
    alpha: f64,
    beta: f64,
    /// Stationarity residual of the proposal without the MH correction.
    stationarity_residual: f64,
    passed: bool,
}

#[derive(Serialize)]
pub struct TheoryReport {
    format_version: u32,
    config_hash: String,
    seeds: Vec<u64>,
    kernels: Vec<KernelEntry>,
    cycles: Vec<CycleEntry>,
    negative_control: Vec<NegativeControl>,
    passed: bool,
}

fn kernel_failures(r: &KernelReport) -> Vec<String> {
    let mut f = Vec::new();
    if r.row_sum_residual > ROW_TOL {
        f.push(format!("row sums off by {:e}", r.row_sum_residual));
    }
    if r.stationarity_residual > BALANCE_TOL {
        f.push(format!("stationarity residual {:e}", r.stationarity_residual));
    }
    if r.detailed_balance_residual > BALANCE_TOL {
        f.push(format!("detailed balance residual {:e}", r.detailed_balance_residual));
    }
    if let Some(m) = &r.minorization {
        if !m.passed() {
            f.push(format!("minorization margin {:e}", m.margin));
        }
    }
    if let Some(x) = r.tv_bound_excess {
        if x > BOUND_TOL {
            f.push(format!("TV exceeds (1-eps)^n by {x:e}"));
        }
    }
    if r.spectral_consistent == Some(false) {
        f.push("eps exceeds the spectral gap".into());
    }
    f
}

fn cycle_failures(r: &CycleReport) -> Vec<String> {
    let mut f = Vec::new();
    if r.stationarity_residual > BALANCE_TOL {
        f.push(format!("stationarity residual {:e}", r.stationarity_residual));
    }
    if let Some(m) = r.margin {
        if m < 0.0 {
            f.push(format!("minorization margin {m:e}"));
        }
    }
    if let Some(x) = r.tv_bound_excess {
        if x > BOUND_TOL {
            f.push(format!("TV exceeds (1-eps)^n by {x:e}"));
        }
    }
    if r.spectral_consistent == Some(false) {
        f.push("eps exceeds the spectral gap".into());
    }
    f
}

/// (α, β) pairs for one target: explicit pairs, else α = frac/(βM).
fn pairs_for(cfg: &TheoryConfig, t: &QuadraticTarget) -> Vec<(f64, f64)> {
    if !cfg.pairs.is_empty() {
        return cfg.pairs.iter().map(|p| (p[0], p[1])).collect();
    }
    let m = t.lipschitz();
    cfg.betas
        .iter()
        .flat_map(|&b| cfg.fractions.iter().map(move |&f| (f / (b * m), b)))
        .collect()
}

/// Explicit cycles, else one cycle with α from 1/M down to 0.2/M and β from 0.9 to 0.5.
fn cycles_for(cfg: &TheoryConfig, t: &QuadraticTarget) -> CliResult<Vec<Schedule>> {
    let cfg_err = |e: acs_core::AcsError| CliError::Config(format!("theory cycle: {e}"));
    if cfg.cycles.is_empty() {
        let m = t.lipschitz();
        let betas = naive_beta_schedule(5, 0.9, 0.5).map_err(cfg_err)?;
        return Ok(vec![
            Schedule::cyclical(1.0 / m, 0.2 / m, betas, CosineConvention::HalfCosine).map_err(cfg_err)?
        ]);
    }
    cfg.cycles
        .iter()
        .map(|c| Schedule::cyclical(c.alpha_max, c.alpha_min, c.betas.clone(), CosineConvention::HalfCosine).map_err(cfg_err))
        .collect()
}

fn build_targets(specs: &[QuadraticSpec]) -> CliResult<Vec<QuadraticTarget>> {
    specs
        .iter()
        .map(|q| build_quadratic(&q.center, q.hessian.as_deref(), q.curvature, q.max_value))
        .collect()
}

pub fn run(ctx: &Ctx) -> CliResult<()> {
    let cfg = ctx.cfg().theory.clone().unwrap_or_default();
    if cfg.targets.is_empty() {
        return Err(ctx.loaded.error_at("theory.targets", "at least one quadratic target is required"));
    }
    if cfg.n_max == 0 {
        return Err(ctx.loaded.error_at("theory.n_max", "must be positive"));
    }
    let targets = build_targets(&cfg.targets)?;
    let cap = DEFAULT_ENUMERATION_CAP;
    let mut kernels = Vec::new();
    let mut cycles = Vec::new();
    let mut negative_control = Vec::new();
    for (ti, t) in targets.iter().enumerate() {
        for (alpha, beta) in pairs_for(&cfg, t) {
            let params = ProposalParams::new(alpha, beta).map_err(|e| CliError::Config(format!("theory pair: {e}")))?;
            let report = analyze_kernel(t, params, cfg.n_max, cap)?;
            kernels.push(KernelEntry {
                target: ti,
                failures: kernel_failures(&report),
                report,
            });
        }
        for s in cycles_for(&cfg, t)? {
            let report = analyze_cycle(t, &s, cfg.n_max, cap)?;
            cycles.push(CycleEntry {
                target: ti,
                failures: cycle_failures(&report),
                report,
            });
        }
        if cfg.negative_control {
            let (alpha, beta) = pairs_for(&cfg, t).last().copied().unwrap_or((1.0, 0.5));
            let params = ProposalParams::new(alpha, beta).map_err(|e| CliError::Config(format!("theory pair: {e}")))?;
            let pi = exact_distribution(t, cap)?;
            let residual = check_stationarity(&proposal_only_kernel(t, params, cap)?, &pi)?;
            negative_control.push(NegativeControl {
                target: ti,
                alpha,
                beta,
                stationarity_residual: residual,
                passed: residual <= BALANCE_TOL,
            });
        }
    }
    let failed_kernels = kernels.iter().filter(|k| !k.failures.is_empty()).count();
    let failed_cycles = cycles.iter().filter(|c| !c.failures.is_empty()).count();
    let failed_controls = negative_control.iter().filter(|n| !n.passed).count();
    let passed = failed_kernels + failed_cycles + failed_controls == 0;
    let report = TheoryReport {
        format_version: JSON_FORMAT_VERSION,
        config_hash: ctx.hash.clone(),
        seeds: ctx.seeds().to_vec(),
        kernels,
        cycles,
        negative_control,
        passed,
    };
    write_json(&ctx.dir("")?.join("theory_report.json"), &report)?;
    ctx.write_run_config("theory")?;
    eprintln!(
        "{} kernels ({failed_kernels} failed), {} cycles ({failed_cycles} failed), {} negative controls ({failed_controls} failed)",
        report.kernels.len(),
        report.cycles.len(),
        report.negative_control.len()
    );
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{} of the checks in theory_report.json failed",
            failed_kernels + failed_cycles + failed_controls
        )))
    }
}
