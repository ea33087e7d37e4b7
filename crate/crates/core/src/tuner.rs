//! Automatic schedule tuning: a two-stage burn-in, a bracketing search for
//! the extreme step sizes, and a greedy search for the balancing schedule.
//!
//! Acceptance estimates come from single proposals (or `acc_samples` of them)
//! rather than stationary expectations, so every evaluation also moves the
//! chain and the tuning phase doubles as burn-in.

use serde::{Deserialize, Serialize};

use crate::error::{AcsError, Result};
use crate::proposal::{mh_accept_prob, mh_step, sample_proposal, sample_uncorrected, ProposalParams};
use crate::rng::RngStream;
use crate::schedule::{build_alpha_schedule, naive_beta_schedule, CosineConvention, Schedule};
use crate::space::State;
use crate::target::Target;

/// Smallest step size the tuner will ever evaluate.
pub const ALPHA_EPSILON: f64 = 1e-6;

/// How the far end of the step-size bracket is derived from the current bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// α_bound · (1 ∓ ζ|ρ* − ρ|).
    #[default]
    Multiplicative,
    /// α_bound ∓ ζ|ρ* − ρ|.
    Additive,
}

/// Where the chain goes after a round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaUpdate {
    /// Always jump to the winning candidate's proposal.
    #[default]
    Proposal,
    /// Jump with the winner's acceptance probability.
    MhGated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TunerConfig {
    pub beta_max: f64,
    pub beta_min: f64,
    pub rho_star: f64,
    pub steps_per_cycle: usize,
    pub alpha_ceil: f64,
    pub alpha_floor: f64,
    pub zeta: f64,
    pub budget: usize,
    /// Candidates per round when searching step sizes.
    pub alpha_proposals: usize,
    /// Candidates per schedule entry when searching balancing parameters.
    pub beta_proposals: usize,
    pub burnin_nomh: usize,
    pub burnin_mh: usize,
    /// Proposals averaged per candidate.
    pub acc_samples: usize,
    pub update_rule: UpdateRule,
    pub theta_update: ThetaUpdate,
    pub convention: CosineConvention,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self::ordinal()
    }
}

impl TunerConfig {
    /// Defaults for ordinal grids (α_ceil = 60).
    pub fn ordinal() -> Self {
        Self {
            beta_max: 0.95,
            beta_min: 0.5,
            rho_star: 0.5,
            steps_per_cycle: 20,
            alpha_ceil: 60.0,
            alpha_floor: 0.05,
            zeta: 0.5,
            budget: 200,
            alpha_proposals: 5,
            beta_proposals: 10,
            burnin_nomh: 50,
            burnin_mh: 50,
            acc_samples: 1,
            update_rule: UpdateRule::Multiplicative,
            theta_update: ThetaUpdate::Proposal,
            convention: CosineConvention::HalfCosine,
        }
    }

    /// Defaults for binary targets (α_ceil = 5).
    pub fn binary() -> Self {
        Self {
            alpha_ceil: 5.0,
            ..Self::ordinal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AcsError::InvalidParameter(m));
        if !(self.alpha_floor > 0.0 && self.alpha_floor < self.alpha_ceil && self.alpha_ceil.is_finite()) {
            return bad(format!(
                "need 0 < alpha_floor < alpha_ceil, got {} and {}",
                self.alpha_floor, self.alpha_ceil
            ));
        }
        if !(0.5 <= self.beta_min && self.beta_min <= self.beta_max && self.beta_max < 1.0) {
            return bad(format!(
                "need 0.5 <= beta_min <= beta_max < 1, got {} and {}",
                self.beta_min, self.beta_max
            ));
        }
        if !(self.rho_star > 0.0 && self.rho_star < 1.0) {
            return bad(format!("target acceptance must be in (0, 1), got {}", self.rho_star));
        }
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return bad(format!("zeta must be positive, got {}", self.zeta));
        }
        if self.steps_per_cycle < 2 {
            return bad(format!("steps_per_cycle must be at least 2, got {}", self.steps_per_cycle));
        }
        if self.alpha_proposals == 0 || self.beta_proposals == 0 || self.acc_samples == 0 {
            return bad("proposal counts must be positive".into());
        }
        if self.budget < self.alpha_proposals {
            return bad(format!(
                "budget {} is smaller than the {} candidates of one round",
                self.budget, self.alpha_proposals
            ));
        }
        Ok(())
    }

    /// Proposals consumed by a full run of [`auto_tune`], counting each
    /// candidate evaluation once.
    pub fn step_budget(&self) -> usize {
        let rounds = self.budget / self.alpha_proposals;
        self.burnin_nomh + self.burnin_mh + 2 * rounds * self.alpha_proposals + self.beta_proposals * (self.steps_per_cycle - 2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TunePhase {
    AlphaMax,
    AlphaMin,
    Beta,
}

/// One candidate evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneRecord {
    pub phase: TunePhase,
    /// Round for step-size searches, schedule index for the β search.
    pub round: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Mean acceptance probability over chains and repeated proposals.
    pub accept: f64,
    pub selected: bool,
}

/// Two-stage burn-in. Returns the final state and the number of steps taken.
pub fn init_burnin<T: Target + ?Sized>(
    cfg: &TunerConfig,
    target: &T,
    start: &State,
    rng: &mut RngStream,
) -> Result<(State, usize)> {
    cfg.validate()?;
    let mut theta = start.clone();
    let explore = ProposalParams::new(cfg.alpha_ceil, cfg.beta_max)?;
    for _ in 0..cfg.burnin_nomh {
        theta = sample_uncorrected(&theta, target, explore, rng);
    }
    let s = cfg.steps_per_cycle;
    let alphas = build_alpha_schedule(s, cfg.alpha_ceil, cfg.alpha_floor, cfg.convention)?;
    let betas = naive_beta_schedule(s, cfg.beta_max, cfg.beta_min)?;
    // Whole cycles first, then the leftover steps as a truncated cycle so the
    // corrected stage always takes exactly `burnin_mh` steps.
    for k in 0..cfg.burnin_mh {
        let p = ProposalParams {
            alpha: alphas[k % s],
            beta: betas[k % s],
        };
        theta = mh_step(&theta, target, p, rng).state;
    }
    Ok((theta, cfg.burnin_nomh + cfg.burnin_mh))
}

/// `t` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, t: usize) -> Vec<f64> {
    match t {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..t).map(|k| lo + (hi - lo) * k as f64 / (t - 1) as f64).collect(),
    }
}

/// Parameters of one step-size search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaSearch {
    pub alpha_bound: f64,
    pub beta: f64,
    pub rho_star: f64,
    pub zeta: f64,
    pub budget: usize,
    pub proposals: usize,
    pub max_mode: bool,
    pub alpha_ceil: f64,
    pub acc_samples: usize,
    pub update_rule: UpdateRule,
    pub theta_update: ThetaUpdate,
}

impl AlphaSearch {
    pub fn from_config(cfg: &TunerConfig, max_mode: bool) -> Self {
        Self {
            alpha_bound: if max_mode { cfg.alpha_ceil } else { cfg.alpha_floor },
            beta: if max_mode { cfg.beta_max } else { cfg.beta_min },
            rho_star: cfg.rho_star,
            zeta: cfg.zeta,
            budget: cfg.budget,
            proposals: cfg.alpha_proposals,
            max_mode,
            alpha_ceil: cfg.alpha_ceil,
            acc_samples: cfg.acc_samples,
            update_rule: cfg.update_rule,
            theta_update: cfg.theta_update,
        }
    }

    /// The candidate bracket for a round given the last winning acceptance.
    pub fn candidates(&self, alpha_bound: f64, rho_cur: f64) -> Vec<f64> {
        let gap = self.zeta * (self.rho_star - rho_cur).abs();
        let prop = match (self.update_rule, self.max_mode) {
            (UpdateRule::Multiplicative, true) => alpha_bound * (1.0 - gap),
            (UpdateRule::Multiplicative, false) => alpha_bound * (1.0 + gap),
            (UpdateRule::Additive, true) => alpha_bound - gap,
            (UpdateRule::Additive, false) => alpha_bound + gap,
        };
        let clamp = |a: f64| a.clamp(ALPHA_EPSILON, self.alpha_ceil);
        let (lo, hi) = (clamp(prop.min(alpha_bound)), clamp(prop.max(alpha_bound)));
        linspace(lo, hi, self.proposals)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaEstimate {
    pub alpha: f64,
    /// Acceptance of the final winner.
    pub rho: f64,
    pub rounds: usize,
    pub evaluations: usize,
}

struct Evaluation {
    accept: f64,
    proposals: Vec<State>,
    per_chain: Vec<f64>,
}

fn evaluate<T: Target + ?Sized>(
    chains: &[State],
    target: &T,
    params: ProposalParams,
    acc_samples: usize,
    rng: &mut RngStream,
) -> Evaluation {
    let mut proposals = Vec::with_capacity(chains.len());
    let mut per_chain = Vec::with_capacity(chains.len());
    for theta in chains {
        let mut sum = 0.0;
        for rep in 0..acc_samples {
            let out = sample_proposal(theta, target, params, rng);
            sum += mh_accept_prob(theta, &out, target);
            if rep == 0 {
                proposals.push(out.proposed);
            }
        }
        per_chain.push(sum / acc_samples as f64);
    }
    let accept = per_chain.iter().sum::<f64>() / per_chain.len() as f64;
    Evaluation {
        accept,
        proposals,
        per_chain,
    }
}

fn advance(chains: &mut [State], winner: Evaluation, mode: ThetaUpdate, rng: &mut RngStream) {
    for ((theta, proposed), a) in chains.iter_mut().zip(winner.proposals).zip(winner.per_chain) {
        match mode {
            ThetaUpdate::Proposal => *theta = proposed,
            ThetaUpdate::MhGated => {
                if rng.uniform() < a {
                    *theta = proposed;
                }
            }
        }
    }
}

/// Bracketing search for the largest (`max_mode`) or smallest step size whose
/// acceptance is closest to ρ*. With several chains the acceptance of a
/// candidate is their mean.
pub fn estimate_alpha<T: Target + ?Sized>(
    search: &AlphaSearch,
    chains: &mut [State],
    target: &T,
    rng: &mut RngStream,
    log: &mut Vec<TuneRecord>,
) -> Result<AlphaEstimate> {
    if !(search.alpha_bound > 0.0) {
        return Err(AcsError::InvalidParameter(format!(
            "step-size bound must be positive, got {}",
            search.alpha_bound
        )));
    }
    if search.proposals == 0 || search.budget < search.proposals {
        return Err(AcsError::InvalidParameter(format!(
            "budget {} allows no round of {} candidates",
            search.budget, search.proposals
        )));
    }
    if chains.is_empty() {
        return Err(AcsError::EmptyInput("chains"));
    }
    let phase = if search.max_mode { TunePhase::AlphaMax } else { TunePhase::AlphaMin };
    let rounds = search.budget / search.proposals;
    let mut bound = search.alpha_bound.clamp(ALPHA_EPSILON, search.alpha_ceil);
    let mut rho_cur = 0.0;
    for round in 0..rounds {
        let candidates = search.candidates(bound, rho_cur);
        let mut best: Option<(usize, f64, Evaluation)> = None;
        let first_row = log.len();
        for (k, &alpha) in candidates.iter().enumerate() {
            let params = ProposalParams {
                alpha,
                beta: search.beta,
            };
            let ev = evaluate(chains, target, params, search.acc_samples, rng);
            log.push(TuneRecord {
                phase,
                round,
                alpha,
                beta: search.beta,
                accept: ev.accept,
                selected: false,
            });
            let score = (search.rho_star - ev.accept).abs();
            // ties go to the candidate nearest α_prop so flat stretches still move the bracket
            let better = |b: f64| score < b || (score == b && !search.max_mode);
            if best.as_ref().map_or(true, |b| better(b.1)) {
                best = Some((k, score, ev));
            }
        }
        let (k, _, ev) = best.expect("at least one candidate");
        log[first_row + k].selected = true;
        bound = candidates[k];
        rho_cur = ev.accept;
        advance(chains, ev, search.theta_update, rng);
    }
    Ok(AlphaEstimate {
        alpha: bound,
        rho: rho_cur,
        rounds,
        evaluations: rounds * search.proposals,
    })
}

/// Greedy balancing schedule: β_0 = β_max, each interior β_i maximizes the
/// acceptance at `alphas[i]` over [β_min, β_{i−1}], and β_{s−1} = β_min.
#[allow(clippy::too_many_arguments)]
pub fn estimate_bal_schedule<T: Target + ?Sized>(
    alphas: &[f64],
    beta_max: f64,
    beta_min: f64,
    proposals: usize,
    acc_samples: usize,
    theta_update: ThetaUpdate,
    chains: &mut [State],
    target: &T,
    rng: &mut RngStream,
    log: &mut Vec<TuneRecord>,
) -> Result<Vec<f64>> {
    let s = alphas.len();
    if s < 2 {
        return Err(AcsError::InvalidSchedule(format!("need at least 2 steps per cycle, got {s}")));
    }
    if !(0.5 <= beta_min && beta_min <= beta_max && beta_max < 1.0) {
        return Err(AcsError::InvalidParameter(format!(
            "need 0.5 <= beta_min <= beta_max < 1, got {beta_min} and {beta_max}"
        )));
    }
    if proposals == 0 || acc_samples == 0 {
        return Err(AcsError::InvalidParameter("proposal counts must be positive".into()));
    }
    if chains.is_empty() {
        return Err(AcsError::EmptyInput("chains"));
    }
    let mut betas = vec![beta_max];
    for (i, &alpha) in alphas.iter().enumerate().take(s - 1).skip(1) {
        let ceil = betas[i - 1];
        let candidates = linspace(beta_min, ceil, proposals);
        let mut best: Option<(usize, Evaluation)> = None;
        let first_row = log.len();
        for (k, &beta) in candidates.iter().enumerate() {
            let ev = evaluate(chains, target, ProposalParams { alpha, beta }, acc_samples, rng);
            log.push(TuneRecord {
                phase: TunePhase::Beta,
                round: i,
                alpha,
                beta,
                accept: ev.accept,
                selected: false,
            });
            if best.as_ref().map_or(true, |b| ev.accept > b.1.accept) {
                best = Some((k, ev));
            }
        }
        let (k, ev) = best.expect("at least one candidate");
        log[first_row + k].selected = true;
        betas.push(candidates[k]);
        advance(chains, ev, theta_update, rng);
    }
    betas.push(beta_min);
    Ok(betas)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneOutcome {
    pub schedule: Schedule,
    pub state: State,
    pub alpha_max: f64,
    pub alpha_min: f64,
    pub rho_max: f64,
    pub rho_min: f64,
    /// α_max came out below α_min and was raised to it.
    pub alpha_max_clamped: bool,
    pub burnin_steps: usize,
    pub tuning_steps: usize,
    pub log: Vec<TuneRecord>,
}

/// Burn-in, then α_min, α_max and the balancing schedule, in that order.
pub fn auto_tune<T: Target + ?Sized>(
    cfg: &TunerConfig,
    target: &T,
    start: &State,
    rng: &mut RngStream,
) -> Result<TuneOutcome> {
    cfg.validate()?;
    target.space().validate(start)?;
    let (theta, burnin_steps) = init_burnin(cfg, target, start, rng)?;
    let mut chains = vec![theta];
    let mut log = Vec::new();
    let min = estimate_alpha(&AlphaSearch::from_config(cfg, false), &mut chains, target, rng, &mut log)?;
    let max = estimate_alpha(&AlphaSearch::from_config(cfg, true), &mut chains, target, rng, &mut log)?;
    let alpha_max_clamped = max.alpha < min.alpha;
    let alpha_max = max.alpha.max(min.alpha);
    let alphas = build_alpha_schedule(cfg.steps_per_cycle, alpha_max, min.alpha, cfg.convention)?;
    let betas = estimate_bal_schedule(
        &alphas,
        cfg.beta_max,
        cfg.beta_min,
        cfg.beta_proposals,
        cfg.acc_samples,
        cfg.theta_update,
        &mut chains,
        target,
        rng,
        &mut log,
    )?;
    let schedule = Schedule::new(alphas, betas)?;
    Ok(TuneOutcome {
        schedule,
        state: chains.pop().expect("one chain"),
        alpha_max,
        alpha_min: min.alpha,
        rho_max: max.rho,
        rho_min: min.rho,
        alpha_max_clamped,
        burnin_steps,
        tuning_steps: log.len(),
        log,
    })
}
