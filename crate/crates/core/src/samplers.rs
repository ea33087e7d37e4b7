//! Chain drivers: the cyclical sampler, its constant-parameter special case,
//! and the random-walk, single-flip and Block Gibbs baselines.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{AcsError, Result};
use crate::proposal::{mh_step, ProposalParams};
use crate::rng::RngStream;
use crate::schedule::Schedule;
use crate::space::State;
use crate::target::{log_softmax, Target};

/// What a run keeps. Acceptance data is kept for every step regardless.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecordConfig {
    /// Record after every `every`-th step.
    pub every: usize,
    /// Keep full states (energies are always kept at recorded steps).
    pub states: bool,
    /// Also record the starting state as step 0.
    pub include_initial: bool,
    pub timing: bool,
}

impl Default for RecordConfig {
    fn default() -> Self {
        Self {
            every: 1,
            states: true,
            include_initial: false,
            timing: false,
        }
    }
}

impl RecordConfig {
    /// Full-state recording for d ≤ 100, energy-only beyond.
    pub fn for_dims(d: usize) -> Self {
        Self {
            states: d <= 100,
            ..Self::default()
        }
    }

    pub fn thinned(every: usize) -> Self {
        Self {
            every,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleTrace {
    /// Step counts (1-based; 0 is the initial state) at which records were taken.
    pub record_steps: Vec<usize>,
    /// Empty when states are not recorded.
    pub states: Vec<State>,
    pub energies: Vec<f64>,
    /// One entry per transition.
    pub accept_probs: Vec<f64>,
    pub accepted: Vec<bool>,
    pub schedule: Option<Schedule>,
    pub seed: u64,
    pub wall_time_secs: Option<f64>,
    pub final_state: State,
}

impl SampleTrace {
    pub fn num_steps(&self) -> usize {
        self.accept_probs.len()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len() as f64
    }

    pub fn mean_accept_prob(&self) -> f64 {
        if self.accept_probs.is_empty() {
            return 0.0;
        }
        self.accept_probs.iter().sum::<f64>() / self.accept_probs.len() as f64
    }
}

/// A single chain's mutable state.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub current: State,
    pub rng: RngStream,
    pub step_index: usize,
    pub cycle_index: usize,
    pub accept_count: usize,
    pub attempt_count: usize,
}

impl ChainState {
    pub fn new(current: State, rng: RngStream) -> Self {
        Self {
            current,
            rng,
            step_index: 0,
            cycle_index: 0,
            accept_count: 0,
            attempt_count: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub accept_prob: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerSpec {
    /// Cyclical schedule; step k uses entry k mod s.
    Acs { schedule: Schedule },
    /// Constant step size with β = 0.5.
    Dmala { alpha: f64 },
    /// Constant (α, β).
    Fixed { alpha: f64, beta: f64 },
    /// One uniformly chosen coordinate set to a uniform value.
    RandomWalk,
    /// Binary only: flip one coordinate chosen by softmax(Δ/temp).
    SingleFlip { temp: f64 },
    /// RBM targets only.
    BlockGibbs,
}

impl SamplerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerSpec::Acs { .. } => "acs",
            SamplerSpec::Dmala { .. } => "dmala",
            SamplerSpec::Fixed { .. } => "fixed",
            SamplerSpec::RandomWalk => "random_walk",
            SamplerSpec::SingleFlip { .. } => "single_flip",
            SamplerSpec::BlockGibbs => "block_gibbs",
        }
    }

    /// Checks parameters and compatibility with the target.
    pub fn validate<T: Target + ?Sized>(&self, target: &T) -> Result<()> {
        match self {
            SamplerSpec::Acs { .. } | SamplerSpec::RandomWalk => Ok(()),
            SamplerSpec::Dmala { alpha } => ProposalParams::locally_balanced(*alpha).map(|_| ()),
            SamplerSpec::Fixed { alpha, beta } => ProposalParams::new(*alpha, *beta).map(|_| ()),
            SamplerSpec::SingleFlip { temp } => {
                if !target.space().is_binary() {
                    return Err(AcsError::NotBinary);
                }
                if !(*temp > 0.0) {
                    return Err(AcsError::InvalidParameter(format!("temperature must be positive, got {temp}")));
                }
                Ok(())
            }
            SamplerSpec::BlockGibbs => target
                .as_rbm()
                .map(|_| ())
                .ok_or_else(|| AcsError::Unsupported("Block Gibbs needs an RBM target".into())),
        }
    }

    fn schedule(&self) -> Option<Schedule> {
        match self {
            SamplerSpec::Acs { schedule } => Some(schedule.clone()),
            SamplerSpec::Dmala { alpha } => Schedule::constant(*alpha, 0.5, 1).ok(),
            SamplerSpec::Fixed { alpha, beta } => Schedule::constant(*alpha, *beta, 1).ok(),
            _ => None,
        }
    }

    /// Advances the chain by one transition. Call [`SamplerSpec::validate`] first.
    pub fn step<T: Target + ?Sized>(&self, chain: &mut ChainState, target: &T) -> StepInfo {
        let info = match self {
            SamplerSpec::Acs { schedule } => {
                chain.cycle_index = chain.step_index / schedule.steps_per_cycle();
                mh_transition(chain, target, schedule.params_at(chain.step_index))
            }
            SamplerSpec::Dmala { alpha } => mh_transition(chain, target, ProposalParams { alpha: *alpha, beta: 0.5 }),
            SamplerSpec::Fixed { alpha, beta } => mh_transition(
                chain,
                target,
                ProposalParams {
                    alpha: *alpha,
                    beta: *beta,
                },
            ),
            SamplerSpec::RandomWalk => random_walk_transition(chain, target),
            SamplerSpec::SingleFlip { temp } => single_flip_transition(chain, target, *temp),
            SamplerSpec::BlockGibbs => {
                let rbm = target.as_rbm().expect("validated RBM target");
                chain.current = rbm.block_gibbs_step(&chain.current, &mut chain.rng);
                StepInfo {
                    accept_prob: 1.0,
                    accepted: true,
                }
            }
        };
        chain.step_index += 1;
        chain.attempt_count += 1;
        if info.accepted {
            chain.accept_count += 1;
        }
        info
    }
}

fn mh_transition<T: Target + ?Sized>(chain: &mut ChainState, target: &T, params: ProposalParams) -> StepInfo {
    let step = mh_step(&chain.current, target, params, &mut chain.rng);
    chain.current = step.state;
    StepInfo {
        accept_prob: step.accept_prob,
        accepted: step.accepted,
    }
}

fn accept_with(chain: &mut ChainState, proposed: State, log_ratio: f64) -> StepInfo {
    let accept_prob = if log_ratio.is_nan() { 0.0 } else { log_ratio.min(0.0).exp() };
    let accepted = chain.rng.uniform() < accept_prob;
    if accepted {
        chain.current = proposed;
    }
    StepInfo { accept_prob, accepted }
}

fn random_walk_transition<T: Target + ?Sized>(chain: &mut ChainState, target: &T) -> StepInfo {
    let space = target.space();
    let i = chain.rng.index(space.dims());
    let v = chain.rng.index(space.domain(i).cardinality()) as u32;
    let mut proposed = chain.current.clone();
    proposed.values_mut()[i] = v;
    let log_ratio = if v == chain.current.get(i) {
        0.0
    } else {
        target.energy(&proposed) - target.energy(&chain.current)
    };
    accept_with(chain, proposed, log_ratio)
}

/// log q(i | θ) for flipping coordinate i, from first-order energy changes.
pub fn single_flip_log_probs(state: &State, grad: &[f64], temp: f64) -> Vec<f64> {
    let logits: Vec<f64> = state
        .values()
        .iter()
        .zip(grad)
        .map(|(&v, &g)| (1.0 - 2.0 * v as f64) * g / temp)
        .collect();
    log_softmax(&logits)
}

fn single_flip_transition<T: Target + ?Sized>(chain: &mut ChainState, target: &T, temp: f64) -> StepInfo {
    let fwd = single_flip_log_probs(&chain.current, &target.grad(&chain.current), temp);
    let probs: Vec<f64> = fwd.iter().map(|l| l.exp()).collect();
    let i = chain.rng.categorical(&probs);
    let mut proposed = chain.current.clone();
    proposed.values_mut()[i] = 1 - proposed.get(i);
    let rev = single_flip_log_probs(&proposed, &target.grad(&proposed), temp);
    let log_ratio = target.energy(&proposed) - target.energy(&chain.current) + rev[i] - fwd[i];
    accept_with(chain, proposed, log_ratio)
}

/// Runs `n_steps` transitions of `spec` from `start`.
pub fn run_sampler<T: Target + ?Sized>(
    spec: &SamplerSpec,
    target: &T,
    n_steps: usize,
    start: State,
    rng: RngStream,
    record: RecordConfig,
) -> Result<SampleTrace> {
    spec.validate(target)?;
    target.space().validate(&start)?;
    if record.every == 0 {
        return Err(AcsError::InvalidParameter("record interval must be at least 1".into()));
    }
    let seed = rng.seed();
    let timer = record.timing.then(Instant::now);
    let mut chain = ChainState::new(start, rng);
    let mut trace = SampleTrace {
        record_steps: Vec::new(),
        states: Vec::new(),
        energies: Vec::new(),
        accept_probs: Vec::with_capacity(n_steps),
        accepted: Vec::with_capacity(n_steps),
        schedule: spec.schedule(),
        seed,
        wall_time_secs: None,
        final_state: chain.current.clone(),
    };
    let push = |trace: &mut SampleTrace, step: usize, s: &State| {
        trace.record_steps.push(step);
        trace.energies.push(target.energy(s));
        if record.states {
            trace.states.push(s.clone());
        }
    };
    if record.include_initial {
        push(&mut trace, 0, &chain.current);
    }
    for step in 1..=n_steps {
        let info = spec.step(&mut chain, target);
        trace.accept_probs.push(info.accept_prob);
        trace.accepted.push(info.accepted);
        if step % record.every == 0 {
            push(&mut trace, step, &chain.current);
        }
    }
    trace.final_state = chain.current;
    trace.wall_time_secs = timer.map(|t| t.elapsed().as_secs_f64());
    Ok(trace)
}

/// `n_cycles` full passes over `schedule`.
pub fn acs_run<T: Target + ?Sized>(
    target: &T,
    schedule: &Schedule,
    n_cycles: usize,
    start: State,
    rng: RngStream,
    record: RecordConfig,
) -> Result<SampleTrace> {
    let spec = SamplerSpec::Acs {
        schedule: schedule.clone(),
    };
    run_sampler(&spec, target, n_cycles * schedule.steps_per_cycle(), start, rng, record)
}

pub fn dmala_run<T: Target + ?Sized>(
    target: &T,
    alpha: f64,
    n_steps: usize,
    start: State,
    rng: RngStream,
    record: RecordConfig,
) -> Result<SampleTrace> {
    run_sampler(&SamplerSpec::Dmala { alpha }, target, n_steps, start, rng, record)
}

pub fn random_walk_run<T: Target + ?Sized>(
    target: &T,
    n_steps: usize,
    start: State,
    rng: RngStream,
    record: RecordConfig,
) -> Result<SampleTrace> {
    run_sampler(&SamplerSpec::RandomWalk, target, n_steps, start, rng, record)
}

pub fn single_flip_informed_run<T: Target + ?Sized>(
    target: &T,
    temp: f64,
    n_steps: usize,
    start: State,
    rng: RngStream,
    record: RecordConfig,
) -> Result<SampleTrace> {
    run_sampler(&SamplerSpec::SingleFlip { temp }, target, n_steps, start, rng, record)
}

pub fn block_gibbs_run<T: Target + ?Sized>(
    target: &T,
    n_sweeps: usize,
    start: State,
    rng: RngStream,
    record: RecordConfig,
) -> Result<SampleTrace> {
    run_sampler(&SamplerSpec::BlockGibbs, target, n_sweeps, start, rng, record)
}

/// Best-improvement coordinate ascent on U. Ties go to the lowest coordinate,
/// then the lowest value; stops when no single-coordinate change strictly
/// increases U.
pub fn greedy_ascent<T: Target + ?Sized>(target: &T, start: &State) -> State {
    let space = target.space();
    let mut current = start.clone();
    let mut current_u = target.energy(&current);
    loop {
        let mut best: Option<(usize, u32, f64)> = None;
        let mut candidate = current.clone();
        for i in 0..space.dims() {
            let original = current.get(i);
            for v in 0..space.domain(i).cardinality() as u32 {
                if v == original {
                    continue;
                }
                candidate.values_mut()[i] = v;
                let u = target.energy(&candidate);
                if u > best.map_or(current_u, |b| b.2) {
                    best = Some((i, v, u));
                }
            }
            candidate.values_mut()[i] = original;
        }
        match best {
            Some((i, v, u)) => {
                current.values_mut()[i] = v;
                current_u = u;
            }
            None => return current,
        }
    }
}

/// Climbs from every hint, starts `spec` at the highest-energy summit (first
/// on ties) and returns it with the trace.
pub fn mode_escape_run<T: Target + ?Sized>(
    spec: &SamplerSpec,
    target: &T,
    hints: &[State],
    n_steps: usize,
    rng: RngStream,
    record: RecordConfig,
) -> Result<(State, SampleTrace)> {
    let mut best: Option<(State, f64)> = None;
    for h in hints {
        target.space().validate(h)?;
        let top = greedy_ascent(target, h);
        let u = target.energy(&top);
        if best.as_ref().map_or(true, |b| u > b.1) {
            best = Some((top, u));
        }
    }
    let (start, _) = best.ok_or(AcsError::EmptyInput("mode hints"))?;
    let trace = run_sampler(spec, target, n_steps, start.clone(), rng, record)?;
    Ok((start, trace))
}
