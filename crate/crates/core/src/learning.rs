//! RBM maximum-likelihood training with persistent or standard contrastive
//! divergence, the cyclical ACS-PCD variant, annealed importance sampling for
//! log Z, and exact log-likelihood on small models.
//!
//! Sign convention: U = log of the unnormalized density throughout, so
//! training ascends E_data[∇U] − E_model[∇U] (the energy is E = −U).

use serde::{Deserialize, Serialize};

use crate::error::{AcsError, Result};
use crate::proposal::{mh_step, sample_uncorrected, ProposalParams};
use crate::rng::RngStream;
use crate::samplers::{ChainState, SamplerSpec};
use crate::space::State;
use crate::target::{log_sum_exp, sigmoid, softplus, Target};
use crate::targets::rbm::binary_configurations;
use crate::targets::RbmModel;
use crate::tuner::{estimate_alpha, AlphaSearch, TuneRecord, TunerConfig};

/// Parameter-shaped gradient (W row-major `n_hidden × n_visible`).
#[derive(Clone, Debug, PartialEq)]
pub struct RbmGrad {
    pub w: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl RbmGrad {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self {
            w: vec![0.0; n_visible * n_hidden],
            a: vec![0.0; n_hidden],
            b: vec![0.0; n_visible],
        }
    }

    pub fn norm(&self) -> f64 {
        self.w.iter().chain(&self.a).chain(&self.b).map(|g| g * g).sum::<f64>().sqrt()
    }

    fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w.iter_mut().chain(self.a.iter_mut()).chain(self.b.iter_mut())
    }

    fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w.iter().chain(&self.a).chain(&self.b)
    }
}

fn accumulate(model: &RbmModel, x: &[f64], weight: f64, g: &mut RbmGrad) {
    let nv = model.n_visible();
    for (j, z) in model.hidden_preactivation(x).into_iter().enumerate() {
        let hj = weight * sigmoid(z);
        g.a[j] += hj;
        for (gw, &xi) in g.w[j * nv..(j + 1) * nv].iter_mut().zip(x) {
            *gw += hj * xi;
        }
    }
    for (gb, &xi) in g.b.iter_mut().zip(x) {
        *gb += weight * xi;
    }
}

/// Mean of ∂U/∂φ over a batch: ∂U/∂W = σ(Wx+a)xᵀ, ∂U/∂a = σ(Wx+a), ∂U/∂b = x.
pub fn mean_param_grad(model: &RbmModel, batch: &[State]) -> Result<RbmGrad> {
    if batch.is_empty() {
        return Err(AcsError::EmptyInput("batch"));
    }
    let mut g = RbmGrad::zeros(model.n_visible(), model.n_hidden());
    let w = 1.0 / batch.len() as f64;
    for s in batch {
        model.space().validate(s)?;
        accumulate(model, &s.to_real(), w, &mut g);
    }
    Ok(g)
}

/// E_model[∂U/∂φ] by enumerating all visible configurations.
pub fn exact_model_param_grad(model: &RbmModel, max_units: usize) -> Result<RbmGrad> {
    let nv = model.n_visible();
    if nv > max_units {
        return Err(AcsError::EnumerationCapExceeded {
            states: 1u128 << nv.min(127),
            cap: 1u128 << max_units,
        });
    }
    let log_z = model.exact_log_partition(max_units)?;
    let mut g = RbmGrad::zeros(nv, model.n_hidden());
    for x in binary_configurations(nv) {
        accumulate(model, &x, (model.free_energy(&x) - log_z).exp(), &mut g);
    }
    Ok(g)
}

/// Gradient of [`exact_log_likelihood`] with the model expectation computed exactly.
pub fn exact_ml_gradient(model: &RbmModel, data: &[State], max_units: usize) -> Result<RbmGrad> {
    let mut g = mean_param_grad(model, data)?;
    let m = exact_model_param_grad(model, max_units)?;
    for (a, b) in g.iter_mut().zip(m.iter()) {
        *a -= b;
    }
    Ok(g)
}

/// E_data[∇_φU] − E_model[∇_φU]; the ascent direction of the data log-likelihood.
pub fn ml_gradient(model: &RbmModel, data_batch: &[State], model_batch: &[State]) -> Result<RbmGrad> {
    let mut g = mean_param_grad(model, data_batch)?;
    let m = mean_param_grad(model, model_batch)?;
    for (a, b) in g.iter_mut().zip(m.iter()) {
        *a -= b;
    }
    Ok(g)
}

/// Mean of U(x) − log Z over the dataset, with log Z by exact enumeration of
/// the smaller layer (at most `max_units` units).
pub fn exact_log_likelihood(model: &RbmModel, data: &[State], max_units: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(AcsError::EmptyInput("dataset"));
    }
    let log_z = model.exact_log_partition(max_units)?;
    let mut total = 0.0;
    for x in data {
        model.space().validate(x)?;
        total += model.energy(x);
    }
    Ok(total / data.len() as f64 - log_z)
}

pub const DEFAULT_MAX_ENUMERATED_UNITS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer moments; applies ascent steps in place.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    kind: Optimizer,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptimizerState {
    pub fn new(kind: Optimizer, n_params: usize) -> Self {
        Self {
            kind,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, model: &mut RbmModel, grad: &RbmGrad, lr: f64) {
        self.t += 1;
        let (w, a, b) = model.params_mut();
        let params = w.iter_mut().chain(a.iter_mut()).chain(b.iter_mut());
        match self.kind {
            Optimizer::Sgd => {
                for (p, g) in params.zip(grad.iter()) {
                    *p += lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                for (((p, g), m), v) in params.zip(grad.iter()).zip(&mut self.m).zip(&mut self.v) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p += lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainMode {
    /// Buffer persists across iterations.
    #[default]
    Persistent,
    /// Buffer restarts from the data batch every iteration.
    Contrastive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcdConfig {
    pub buffer_size: usize,
    pub batch_size: usize,
    pub sampling_steps: usize,
    pub learning_rate: f64,
    pub n_iters: usize,
    pub optimizer: Optimizer,
    pub mode: ChainMode,
    /// Save a model copy every this many iterations.
    pub checkpoint_every: Option<usize>,
    /// Iterations per ACS-PCD cycle.
    pub cycle_length: usize,
    /// Cycles between re-tunings; `None` never re-tunes.
    pub tune_interval: Option<usize>,
    /// Sampling steps of the exploration iteration.
    pub big_steps: usize,
    /// Sampling steps of the other iterations.
    pub small_steps: usize,
    /// Step sizes used before (or without) tuning.
    pub alpha_max: f64,
    pub alpha_min: f64,
    /// Skip the MH correction on the first step of each exploration iteration.
    pub uncorrected_first_step: bool,
    pub tuner: TunerConfig,
}

impl Default for PcdConfig {
    fn default() -> Self {
        Self {
            buffer_size: 100,
            batch_size: 100,
            sampling_steps: 10,
            learning_rate: 0.001,
            n_iters: 1000,
            optimizer: Optimizer::adam(),
            mode: ChainMode::Persistent,
            checkpoint_every: None,
            cycle_length: 50,
            tune_interval: Some(50),
            big_steps: 20,
            small_steps: 10,
            alpha_max: 2.0,
            alpha_min: 0.2,
            uncorrected_first_step: true,
            tuner: TunerConfig::binary(),
        }
    }
}

impl PcdConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AcsError::InvalidParameter(m));
        if self.buffer_size == 0 || self.batch_size == 0 {
            return bad("buffer and batch sizes must be positive".into());
        }
        if self.mode == ChainMode::Persistent && self.buffer_size < self.batch_size {
            return bad(format!(
                "buffer size {} is smaller than batch size {}",
                self.buffer_size, self.batch_size
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be non-negative, got {}", self.learning_rate));
        }
        if self.cycle_length == 0 || self.tune_interval == Some(0) {
            return bad("cycle length and tune interval must be positive".into());
        }
        if self.checkpoint_every == Some(0) {
            return bad("checkpoint interval must be positive".into());
        }
        if !(self.alpha_min > 0.0 && self.alpha_max >= self.alpha_min) {
            return bad(format!(
                "need alpha_max >= alpha_min > 0, got {} and {}",
                self.alpha_max, self.alpha_min
            ));
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
                return bad("Adam needs beta1, beta2 in [0, 1) and eps > 0".into());
            }
        }
        self.tuner.validate()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearnTrace {
    pub data_energy: Vec<f64>,
    pub buffer_energy: Vec<f64>,
    pub grad_norm: Vec<f64>,
    /// Step sizes in force during each iteration (ACS-PCD only).
    pub alpha_max: Vec<f64>,
    pub alpha_min: Vec<f64>,
    pub checkpoints: Vec<(usize, RbmModel)>,
    pub tune_log: Vec<TuneRecord>,
}

fn mean_energy(model: &RbmModel, states: &[State]) -> f64 {
    states.iter().map(|s| model.energy(s)).sum::<f64>() / states.len() as f64
}

fn check_dataset(model: &RbmModel, data: &[State]) -> Result<()> {
    if data.is_empty() {
        return Err(AcsError::EmptyInput("dataset"));
    }
    for x in data {
        if x.len() != model.n_visible() {
            return Err(AcsError::DimensionMismatch {
                expected: model.n_visible(),
                got: x.len(),
            });
        }
        model.space().validate(x)?;
    }
    Ok(())
}

fn draw_batch(data: &[State], size: usize, rng: &mut RngStream) -> Vec<State> {
    (0..size).map(|_| data[rng.index(data.len())].clone()).collect()
}

fn init_buffer(model: &RbmModel, cfg: &PcdConfig, rng: &RngStream) -> Vec<ChainState> {
    let mut init = rng.split(u64::MAX);
    (0..cfg.buffer_size)
        .map(|c| {
            let x = State::new((0..model.n_visible()).map(|_| init.bernoulli(0.5) as u32).collect());
            ChainState::new(x, rng.split(c as u64))
        })
        .collect()
}

fn model_batch(buffer: &[ChainState], cfg: &PcdConfig, rng: &mut RngStream) -> Vec<State> {
    if buffer.len() == cfg.batch_size {
        buffer.iter().map(|c| c.current.clone()).collect()
    } else {
        (0..cfg.batch_size)
            .map(|_| buffer[rng.index(buffer.len())].current.clone())
            .collect()
    }
}

struct Trainer<'a> {
    cfg: &'a PcdConfig,
    model: RbmModel,
    opt: OptimizerState,
    trace: LearnTrace,
}

impl<'a> Trainer<'a> {
    fn new(model: RbmModel, cfg: &'a PcdConfig) -> Self {
        let n = model.weights().len() + model.n_hidden() + model.n_visible();
        Self {
            cfg,
            model,
            opt: OptimizerState::new(cfg.optimizer, n),
            trace: LearnTrace::default(),
        }
    }

    fn update(&mut self, iter: usize, data_batch: &[State], neg: &[State]) -> Result<()> {
        let g = ml_gradient(&self.model, data_batch, neg)?;
        self.trace.data_energy.push(mean_energy(&self.model, data_batch));
        self.trace.buffer_energy.push(mean_energy(&self.model, neg));
        self.trace.grad_norm.push(g.norm());
        self.opt.step(&mut self.model, &g, self.cfg.learning_rate);
        if let Some(every) = self.cfg.checkpoint_every {
            if (iter + 1) % every == 0 {
                self.trace.checkpoints.push((iter + 1, self.model.clone()));
            }
        }
        Ok(())
    }
}

/// PCD (or CD) training with any sampler from [`SamplerSpec`].
pub fn pcd_train(
    model: RbmModel,
    data: &[State],
    sampler: &SamplerSpec,
    cfg: &PcdConfig,
    rng: &mut RngStream,
) -> Result<(RbmModel, LearnTrace)> {
    cfg.validate()?;
    check_dataset(&model, data)?;
    sampler.validate(&model)?;
    let mut buffer = init_buffer(&model, cfg, rng);
    let mut tr = Trainer::new(model, cfg);
    for iter in 0..cfg.n_iters {
        let data_batch = draw_batch(data, cfg.batch_size, rng);
        if cfg.mode == ChainMode::Contrastive {
            buffer = data_batch
                .iter()
                .enumerate()
                .map(|(c, x)| ChainState::new(x.clone(), rng.split(((iter as u64) << 32) | c as u64)))
                .collect();
        }
        for chain in buffer.iter_mut() {
            for _ in 0..cfg.sampling_steps {
                sampler.step(chain, &tr.model);
            }
        }
        let neg = model_batch(&buffer, cfg, rng);
        tr.update(iter, &data_batch, &neg)?;
    }
    Ok((tr.model, tr.trace))
}

/// ACS-PCD: within each cycle of `cycle_length` iterations, iteration 0
/// explores with (α_max, β_max) for `big_steps` steps and the rest refine
/// with (α_min, β_min) for `small_steps` steps. Every `tune_interval` cycles
/// the step sizes are re-estimated on the buffer: iteration 0 re-tunes α_max
/// and iteration 1 re-tunes α_min, and those searches replace the sampling
/// of their iterations.
pub fn acs_pcd_train(
    model: RbmModel,
    data: &[State],
    cfg: &PcdConfig,
    rng: &mut RngStream,
) -> Result<(RbmModel, LearnTrace)> {
    cfg.validate()?;
    check_dataset(&model, data)?;
    let mut buffer = init_buffer(&model, cfg, rng);
    let mut tune_rng = rng.split(u64::MAX - 1);
    let mut tr = Trainer::new(model, cfg);
    let (mut alpha_max, mut alpha_min) = (cfg.alpha_max, cfg.alpha_min);
    let tc = &cfg.tuner;
    for iter in 0..cfg.n_iters {
        let cycle = iter / cfg.cycle_length;
        let pos = iter % cfg.cycle_length;
        let data_batch = draw_batch(data, cfg.batch_size, rng);
        if cfg.mode == ChainMode::Contrastive {
            buffer = data_batch
                .iter()
                .enumerate()
                .map(|(c, x)| ChainState::new(x.clone(), rng.split(((iter as u64) << 32) | c as u64)))
                .collect();
        }
        let tuning = cfg.tune_interval.is_some_and(|k| cycle % k == 0) && pos <= 1;
        if tuning {
            let max_mode = pos == 0;
            let mut states: Vec<State> = buffer.iter().map(|c| c.current.clone()).collect();
            let search = AlphaSearch::from_config(tc, max_mode);
            let est = estimate_alpha(&search, &mut states, &tr.model, &mut tune_rng, &mut tr.trace.tune_log)?;
            for (c, s) in buffer.iter_mut().zip(states) {
                c.current = s;
            }
            if max_mode {
                alpha_max = est.alpha;
            } else {
                alpha_min = est.alpha;
            }
            alpha_max = alpha_max.max(alpha_min);
        } else {
            let (params, steps) = if pos == 0 {
                (ProposalParams::new(alpha_max, tc.beta_max)?, cfg.big_steps)
            } else {
                (ProposalParams::new(alpha_min, tc.beta_min)?, cfg.small_steps)
            };
            for chain in buffer.iter_mut() {
                for k in 0..steps {
                    if pos == 0 && k == 0 && cfg.uncorrected_first_step {
                        chain.current = sample_uncorrected(&chain.current, &tr.model, params, &mut chain.rng);
                    } else {
                        chain.current = mh_step(&chain.current, &tr.model, params, &mut chain.rng).state;
                    }
                }
            }
        }
        tr.trace.alpha_max.push(alpha_max);
        tr.trace.alpha_min.push(alpha_min);
        let neg = model_batch(&buffer, cfg, rng);
        tr.update(iter, &data_batch, &neg)?;
    }
    Ok((tr.model, tr.trace))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AisEstimate {
    pub log_z: f64,
    pub log_weight_variance: f64,
    pub log_weights: Vec<f64>,
}

/// Analytic log Z of the base model (W = 0, a = 0, same b).
pub fn ais_base_log_z(model: &RbmModel) -> f64 {
    model.visible_bias().iter().map(|&b| softplus(b)).sum::<f64>() + model.n_hidden() as f64 * std::f64::consts::LN_2
}

/// Annealed importance sampling along the path that scales W and a by
/// t_k = k / n_temps, with Block Gibbs transitions at each intermediate
/// temperature.
pub fn ais_log_z(
    model: &RbmModel,
    n_temps: usize,
    steps_per_temp: usize,
    n_particles: usize,
    rng: &mut RngStream,
) -> Result<AisEstimate> {
    if n_temps == 0 || n_particles == 0 {
        return Err(AcsError::InvalidParameter("AIS needs at least one temperature and one particle".into()));
    }
    let tempered_energy = |pre: &[f64], x: &[f64], t: f64| -> f64 {
        pre.iter().map(|&z| softplus(t * z)).sum::<f64>()
            + model.visible_bias().iter().zip(x).map(|(b, x)| b * x).sum::<f64>()
    };
    let ladder: Vec<f64> = (0..=n_temps).map(|k| k as f64 / n_temps as f64).collect();
    let models: Vec<RbmModel> = ladder[1..n_temps].iter().map(|&t| model.tempered(t)).collect();
    let base_probs: Vec<f64> = model.visible_bias().iter().map(|&b| sigmoid(b)).collect();
    let mut log_weights = Vec::with_capacity(n_particles);
    for _ in 0..n_particles {
        let mut x = State::new(base_probs.iter().map(|&p| rng.bernoulli(p) as u32).collect());
        let mut lw = 0.0;
        for k in 1..=n_temps {
            let xr = x.to_real();
            let pre = model.hidden_preactivation(&xr);
            lw += tempered_energy(&pre, &xr, ladder[k]) - tempered_energy(&pre, &xr, ladder[k - 1]);
            if k < n_temps {
                for _ in 0..steps_per_temp {
                    x = models[k - 1].block_gibbs_step(&x, rng);
                }
            }
        }
        log_weights.push(lw);
    }
    let n = n_particles as f64;
    let log_z = ais_base_log_z(model) + log_sum_exp(&log_weights) - n.ln();
    let mean = log_weights.iter().sum::<f64>() / n;
    let log_weight_variance = log_weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
    Ok(AisEstimate {
        log_z,
        log_weight_variance,
        log_weights,
    })
}

/// Two noisy prototypes: the first half of the bits on (cluster 0) or the
/// second half on (cluster 1), each bit flipped with `flip_prob`.
pub fn two_cluster_dataset(n_visible: usize, n: usize, flip_prob: f64, rng: &mut RngStream) -> Vec<State> {
    (0..n)
        .map(|_| {
            let cluster = rng.bernoulli(0.5);
            State::new(
                (0..n_visible)
                    .map(|i| {
                        let proto = (i < n_visible / 2) != cluster;
                        (proto != rng.bernoulli(flip_prob)) as u32
                    })
                    .collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::sample_rbm_synthetic;

    fn tiny(seed: u64) -> RbmModel {
        sample_rbm_synthetic(5, 3, &mut RngStream::new(seed)).unwrap()
    }

    #[test]
    fn identical_batches_cancel() {
        let m = tiny(1);
        let batch = two_cluster_dataset(5, 12, 0.1, &mut RngStream::new(2));
        let g = ml_gradient(&m, &batch, &batch).unwrap();
        assert!(g.norm() == 0.0);
        assert!(ml_gradient(&m, &[], &batch).is_err());
    }

    #[test]
    fn zero_model_visible_gradient() {
        let m = RbmModel::zeros(4, 2).unwrap();
        let d = vec![State::new(vec![1, 0, 1, 1]), State::new(vec![1, 1, 0, 1])];
        let n = vec![State::new(vec![0, 0, 1, 0])];
        let g = ml_gradient(&m, &d, &n).unwrap();
        assert_eq!(g.b, vec![1.0, 0.5, -0.5, 1.0]);
    }

    #[test]
    fn uniform_model_log_likelihood() {
        let m = RbmModel::zeros(6, 3).unwrap();
        let data = two_cluster_dataset(6, 9, 0.2, &mut RngStream::new(0));
        let ll = exact_log_likelihood(&m, &data, 20).unwrap();
        assert!((ll + 6.0 * std::f64::consts::LN_2).abs() < 1e-12);
        let mut rev = data.clone();
        rev.reverse();
        let m = sample_rbm_synthetic(6, 3, &mut RngStream::new(4)).unwrap();
        assert!((exact_log_likelihood(&m, &data, 20).unwrap() - exact_log_likelihood(&m, &rev, 20).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_leaves_model() {
        let m = tiny(3);
        let data = two_cluster_dataset(5, 20, 0.1, &mut RngStream::new(1));
        let cfg = PcdConfig {
            learning_rate: 0.0,
            n_iters: 5,
            buffer_size: 10,
            batch_size: 10,
            ..PcdConfig::default()
        };
        let (out, trace) = pcd_train(m.clone(), &data, &SamplerSpec::Dmala { alpha: 0.2 }, &cfg, &mut RngStream::new(0)).unwrap();
        assert_eq!(out, m);
        assert_eq!(trace.grad_norm.len(), 5);
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        let mut m = RbmModel::zeros(2, 1).unwrap();
        let g = RbmGrad {
            w: vec![3.0, -0.5],
            a: vec![0.0],
            b: vec![1e-3, -2.0],
        };
        let mut opt = OptimizerState::new(Optimizer::adam(), 5);
        opt.step(&mut m, &g, 0.01);
        assert!((m.weights()[0] - 0.01).abs() < 1e-9);
        assert!((m.weights()[1] + 0.01).abs() < 1e-9);
        assert_eq!(m.hidden_bias()[0], 0.0);
        assert!((m.visible_bias()[1] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn checkpoints_and_buffer_domain() {
        let data = two_cluster_dataset(5, 30, 0.1, &mut RngStream::new(1));
        let cfg = PcdConfig {
            n_iters: 20,
            buffer_size: 8,
            batch_size: 4,
            checkpoint_every: Some(5),
            ..PcdConfig::default()
        };
        let (_, t) = pcd_train(tiny(2), &data, &SamplerSpec::Dmala { alpha: 0.5 }, &cfg, &mut RngStream::new(3)).unwrap();
        assert_eq!(t.checkpoints.iter().map(|c| c.0).collect::<Vec<_>>(), vec![5, 10, 15, 20]);
    }

    #[test]
    fn config_validation() {
        let bad = [
            PcdConfig { buffer_size: 2, batch_size: 4, ..PcdConfig::default() },
            PcdConfig { learning_rate: -1.0, ..PcdConfig::default() },
            PcdConfig { alpha_min: 3.0, alpha_max: 2.0, ..PcdConfig::default() },
            PcdConfig { tune_interval: Some(0), ..PcdConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn ais_degenerate_cases() {
        let mut m = RbmModel::zeros(4, 3).unwrap();
        m.params_mut().2.copy_from_slice(&[0.3, -1.0, 0.0, 2.0]);
        m.params_mut().1.copy_from_slice(&[0.5, -0.2, 0.1]);
        let est = ais_log_z(&m, 10, 1, 20, &mut RngStream::new(0)).unwrap();
        let exact = m.exact_log_partition(20).unwrap();
        assert!((est.log_z - exact).abs() < 1e-12);
        assert!(est.log_weight_variance < 1e-24);
        let m = tiny(5);
        let one = ais_log_z(&m, 1, 1, 50_000, &mut RngStream::new(1)).unwrap();
        assert!((one.log_z - m.exact_log_partition(20).unwrap()).abs() < 0.05);
    }

    #[test]
    fn two_cluster_shape() {
        let d = two_cluster_dataset(10, 200, 0.0, &mut RngStream::new(0));
        let a = State::new(vec![1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
        let b = State::new(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert!(d.iter().all(|x| *x == a || *x == b));
        assert!(d.iter().any(|x| *x == a) && d.iter().any(|x| *x == b));
    }
    fn fd_check(model: &RbmModel, data: &[State]) -> f64 {
        let g = exact_ml_gradient(model, data, 20).unwrap();
        let analytic: Vec<f64> = g.iter().copied().collect();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (k, &an) in analytic.iter().enumerate() {
            let ll = |delta: f64| {
                let mut m = model.clone();
                let (w, a, b) = m.params_mut();
                let n_w = w.len();
                let n_a = a.len();
                if k < n_w {
                    w[k] += delta;
                } else if k < n_w + n_a {
                    a[k - n_w] += delta;
                } else {
                    b[k - n_w - n_a] += delta;
                }
                exact_log_likelihood(&m, data, 20).unwrap()
            };
            let fd = (ll(h) - ll(-h)) / (2.0 * h);
            worst = worst.max((fd - an).abs() / an.abs().max(1e-3));
        }
        worst
    }

    #[test]
    fn exact_gradient_matches_finite_differences() {
        for seed in 0..4 {
            let m = sample_rbm_synthetic(5, 3, &mut RngStream::new(seed)).unwrap();
            let data = two_cluster_dataset(5, 3, 0.2, &mut RngStream::new(seed + 10));
            assert!(fd_check(&m, &data[..1]) < 1e-4);
            assert!(fd_check(&m, &data) < 1e-4);
        }
    }

    #[test]
    fn degenerate_acs_pcd_is_dmala_pcd() {
        let data = two_cluster_dataset(6, 40, 0.1, &mut RngStream::new(9));
        let mut cfg = PcdConfig {
            n_iters: 30,
            buffer_size: 12,
            batch_size: 6,
            sampling_steps: 4,
            big_steps: 4,
            small_steps: 4,
            cycle_length: 5,
            tune_interval: None,
            alpha_max: 0.4,
            alpha_min: 0.4,
            uncorrected_first_step: false,
            learning_rate: 0.01,
            ..PcdConfig::default()
        };
        cfg.tuner.beta_max = 0.5;
        cfg.tuner.beta_min = 0.5;
        let m = sample_rbm_synthetic(6, 3, &mut RngStream::new(0)).unwrap();
        let (a, ta) = acs_pcd_train(m.clone(), &data, &cfg, &mut RngStream::new(77)).unwrap();
        let (b, tb) = pcd_train(m, &data, &SamplerSpec::Dmala { alpha: 0.4 }, &cfg, &mut RngStream::new(77)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta.buffer_energy, tb.buffer_energy);
    }

    #[test]
    fn acs_pcd_retunes_and_improves() {
        let data = two_cluster_dataset(8, 100, 0.05, &mut RngStream::new(2));
        let m = RbmModel::zeros(8, 4).unwrap();
        let cfg = PcdConfig {
            n_iters: 60,
            buffer_size: 20,
            batch_size: 20,
            cycle_length: 10,
            tune_interval: Some(2),
            learning_rate: 0.05,
            ..PcdConfig::default()
        };
        let before = exact_log_likelihood(&m, &data, 20).unwrap();
        let (out, t) = acs_pcd_train(m, &data, &cfg, &mut RngStream::new(5)).unwrap();
        assert!(exact_log_likelihood(&out, &data, 20).unwrap() > before + 0.5);
        assert_eq!(t.alpha_max.len(), 60);
        assert!(!t.tune_log.is_empty());
        assert!(t.alpha_max.iter().zip(&t.alpha_min).all(|(a, b)| a >= b));
        // tuning cycles are 0, 2, 4: step sizes change only at their first two iterations
        for i in 1..60 {
            if t.alpha_max[i] != t.alpha_max[i - 1] || t.alpha_min[i] != t.alpha_min[i - 1] {
                assert!(matches!(i, 0 | 1 | 20 | 21 | 40 | 41), "changed at {i}");
            }
        }
    }

    #[test]
    fn contrastive_mode_runs() {
        let data = two_cluster_dataset(6, 50, 0.05, &mut RngStream::new(2));
        let cfg = PcdConfig {
            n_iters: 100,
            buffer_size: 10,
            batch_size: 10,
            mode: ChainMode::Contrastive,
            learning_rate: 0.05,
            ..PcdConfig::default()
        };
        let m = RbmModel::zeros(6, 3).unwrap();
        let before = exact_log_likelihood(&m, &data, 20).unwrap();
        let (out, _) = pcd_train(m, &data, &SamplerSpec::BlockGibbs, &cfg, &mut RngStream::new(1)).unwrap();
        assert!(exact_log_likelihood(&out, &data, 20).unwrap() > before + 0.5);
    }
}
