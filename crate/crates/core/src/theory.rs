//! Exact transition kernels on enumerable spaces and numerical checks of the
//! ergodicity results: reversibility, stationarity, the uniform minorization
//! constant, geometric TV bounds, cycle composition and spectral gaps.
//!
//! States are indexed by [`crate::space::enumerate_states`] order. Matrix
//! products use Neumaier-compensated accumulation.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{AcsError, Result};
use crate::proposal::{proposal_tables, ProposalParams};
use crate::samplers::single_flip_log_probs;
use crate::schedule::Schedule;
use crate::space::{enumerate_states, State};
use crate::target::{exact_distribution, sigmoid, Target};
use crate::targets::{QuadraticTarget, RbmModel};

/// Running sum with Neumaier compensation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = CompensatedSum::default();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Row-stochastic matrix over an enumerated state space.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
    /// Accepted self-proposal mass per state, when built from an MH kernel.
    pub self_accept: Option<Vec<f64>>,
    /// Rejected mass per state, when built from an MH kernel.
    pub rejection: Option<Vec<f64>>,
}

impl TransitionMatrix {
    /// Checks squareness, non-negativity and unit row sums (to 1e-10).
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(AcsError::DimensionMismatch { expected: n * n, got: data.len() });
        }
        let m = Self {
            n,
            data,
            self_accept: None,
            rejection: None,
        };
        if m.data.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(AcsError::InvalidParameter("transition probabilities must be finite and non-negative".into()));
        }
        if m.max_row_sum_residual() > 1e-10 {
            return Err(AcsError::InvalidParameter("rows must sum to 1".into()));
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            n,
            data,
            self_accept: None,
            rejection: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_row_sum_residual(&self) -> f64 {
        (0..self.n)
            .map(|i| (compensated_sum(self.row(i).iter().copied()) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `self · other` with compensated accumulation.
    pub fn multiply(&self, other: &TransitionMatrix) -> Result<TransitionMatrix> {
        if self.n != other.n {
            return Err(AcsError::DimensionMismatch { expected: self.n, got: other.n });
        }
        let n = self.n;
        let mut data = vec![0.0; n * n];
        let mut acc = vec![CompensatedSum::default(); n];
        for i in 0..n {
            acc.iter_mut().for_each(|a| *a = CompensatedSum::default());
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for (slot, &b) in acc.iter_mut().zip(other.row(k)) {
                    slot.add(a * b);
                }
            }
            for (d, a) in data[i * n..(i + 1) * n].iter_mut().zip(&acc) {
                *d = a.value();
            }
        }
        Ok(TransitionMatrix {
            n,
            data,
            self_accept: None,
            rejection: None,
        })
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut acc = vec![CompensatedSum::default(); n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (slot, &p) in acc.iter_mut().zip(self.row(i)) {
                slot.add(vi * p);
            }
        }
        acc.iter().map(|a| a.value()).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

/// Builds an MH kernel from a log proposal density. The diagonal collects
/// the self-proposal and every rejected move.
fn mh_kernel<F>(log_pi: &[f64], log_q: F, correct: bool) -> TransitionMatrix
where
    F: Fn(usize, usize) -> f64,
{
    let n = log_pi.len();
    let mut data = vec![0.0; n * n];
    let mut self_accept = vec![0.0; n];
    let mut rejection = vec![0.0; n];
    for i in 0..n {
        let mut rejected = CompensatedSum::default();
        for j in 0..n {
            let lq = log_q(i, j);
            if lq == f64::NEG_INFINITY {
                continue;
            }
            let q = lq.exp();
            if i == j {
                self_accept[i] = q;
                continue;
            }
            let a = if correct {
                (log_pi[j] - log_pi[i] + log_q(j, i) - lq).min(0.0).exp()
            } else {
                1.0
            };
            data[i * n + j] = q * a;
            rejected.add(q * (1.0 - a));
        }
        rejection[i] = rejected.value();
        data[i * n + i] = self_accept[i] + rejection[i];
    }
    TransitionMatrix {
        n,
        data,
        self_accept: Some(self_accept),
        rejection: Some(rejection),
    }
}

fn enumerate_with_energy<T: Target + ?Sized>(target: &T, cap: u128) -> Result<(Vec<State>, Vec<f64>)> {
    let states = enumerate_states(target.space(), cap)?;
    let energies = states.iter().map(|s| target.energy(s)).collect();
    Ok((states, energies))
}

fn gradient_proposal_kernel<T: Target + ?Sized>(
    target: &T,
    params: ProposalParams,
    cap: u128,
    correct: bool,
) -> Result<TransitionMatrix> {
    let (states, energies) = enumerate_with_energy(target, cap)?;
    let tables: Vec<Vec<Vec<f64>>> = states
        .iter()
        .map(|s| proposal_tables(target, s, &target.grad(s), params))
        .collect();
    let log_q = |i: usize, j: usize| -> f64 {
        tables[i]
            .iter()
            .zip(states[j].values())
            .map(|(t, &v)| t[v as usize])
            .sum()
    };
    Ok(mh_kernel(&energies, log_q, correct))
}

/// Exact MH kernel of the gradient-informed proposal at fixed (α, β).
pub fn exact_kernel<T: Target + ?Sized>(target: &T, params: ProposalParams, cap: u128) -> Result<TransitionMatrix> {
    gradient_proposal_kernel(target, params, cap, true)
}

/// The proposal alone, without acceptance. A negative control: it is not
/// π-invariant unless the target happens to make every move acceptable.
pub fn proposal_only_kernel<T: Target + ?Sized>(target: &T, params: ProposalParams, cap: u128) -> Result<TransitionMatrix> {
    gradient_proposal_kernel(target, params, cap, false)
}

/// One exact kernel per schedule entry.
pub fn schedule_kernels<T: Target + ?Sized>(target: &T, schedule: &Schedule, cap: u128) -> Result<Vec<TransitionMatrix>> {
    (0..schedule.steps_per_cycle())
        .map(|k| exact_kernel(target, schedule.params_at(k), cap))
        .collect()
}

/// P̂ = P_1 · P_2 ⋯ P_s for one pass over the schedule.
pub fn composite_cycle_kernel<T: Target + ?Sized>(target: &T, schedule: &Schedule, cap: u128) -> Result<TransitionMatrix> {
    let kernels = schedule_kernels(target, schedule, cap)?;
    let mut iter = kernels.into_iter();
    let mut acc = iter.next().expect("non-empty schedule");
    for k in iter {
        acc = acc.multiply(&k)?;
    }
    Ok(acc)
}

/// Random-walk kernel: one uniform coordinate set to a uniform value.
pub fn random_walk_kernel<T: Target + ?Sized>(target: &T, cap: u128) -> Result<TransitionMatrix> {
    let (states, energies) = enumerate_with_energy(target, cap)?;
    let space = target.space();
    let d = space.dims() as f64;
    let log_q = |i: usize, j: usize| -> f64 {
        let (a, b) = (&states[i], &states[j]);
        let diff: Vec<usize> = (0..a.len()).filter(|&k| a.get(k) != b.get(k)).collect();
        match diff.len() {
            0 => (0..a.len())
                .map(|k| 1.0 / (d * space.domain(k).cardinality() as f64))
                .sum::<f64>()
                .ln(),
            1 => -(d * space.domain(diff[0]).cardinality() as f64).ln(),
            _ => f64::NEG_INFINITY,
        }
    };
    Ok(mh_kernel(&energies, log_q, true))
}

/// Single-flip informed kernel on a binary space.
pub fn single_flip_kernel<T: Target + ?Sized>(target: &T, temp: f64, cap: u128) -> Result<TransitionMatrix> {
    if !target.space().is_binary() {
        return Err(AcsError::NotBinary);
    }
    let (states, energies) = enumerate_with_energy(target, cap)?;
    let flips: Vec<Vec<f64>> = states
        .iter()
        .map(|s| single_flip_log_probs(s, &target.grad(s), temp))
        .collect();
    let log_q = |i: usize, j: usize| -> f64 {
        let (a, b) = (&states[i], &states[j]);
        let diff: Vec<usize> = (0..a.len()).filter(|&k| a.get(k) != b.get(k)).collect();
        if diff.len() == 1 {
            flips[i][diff[0]]
        } else {
            f64::NEG_INFINITY
        }
    };
    Ok(mh_kernel(&energies, log_q, true))
}

/// Visible-space kernel of one Block Gibbs sweep: Σ_h p(h | x) p(x' | h).
pub fn block_gibbs_kernel(rbm: &RbmModel, cap: u128) -> Result<TransitionMatrix> {
    let xs = enumerate_states(rbm.space(), cap)?;
    let nh = rbm.n_hidden();
    if (1u128 << nh) > cap {
        return Err(AcsError::EnumerationCapExceeded {
            states: 1u128 << nh,
            cap,
        });
    }
    let hs: Vec<Vec<f64>> = crate::targets::rbm::binary_configurations(nh).collect();
    let prob_of = |pre: &[f64], bits: &[f64]| -> f64 {
        pre.iter()
            .zip(bits)
            .map(|(&z, &b)| if b > 0.5 { sigmoid(z) } else { sigmoid(-z) })
            .product()
    };
    let n = xs.len();
    let x_real: Vec<Vec<f64>> = xs.iter().map(|x| x.to_real()).collect();
    // p(h | x) and p(x' | h) as dense tables.
    let h_given_x: Vec<Vec<f64>> = x_real
        .iter()
        .map(|x| {
            let pre = rbm.hidden_preactivation(x);
            hs.iter().map(|h| prob_of(&pre, h)).collect()
        })
        .collect();
    let x_given_h: Vec<Vec<f64>> = hs
        .iter()
        .map(|h| {
            let pre = rbm.visible_preactivation(h);
            x_real.iter().map(|x| prob_of(&pre, x)).collect()
        })
        .collect();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let mut acc = vec![CompensatedSum::default(); n];
        for (k, &ph) in h_given_x[i].iter().enumerate() {
            for (slot, &px) in acc.iter_mut().zip(&x_given_h[k]) {
                slot.add(ph * px);
            }
        }
        for (d, a) in data[i * n..(i + 1) * n].iter_mut().zip(&acc) {
            *d = a.value();
        }
    }
    Ok(TransitionMatrix {
        n,
        data,
        self_accept: None,
        rejection: None,
    })
}

/// max_j |(πP)_j − π_j|.
pub fn check_stationarity(p: &TransitionMatrix, pi: &[f64]) -> Result<f64> {
    if pi.len() != p.n() {
        return Err(AcsError::DimensionMismatch { expected: p.n(), got: pi.len() });
    }
    Ok(p.left_apply(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// max_{i,j} |π_i P_ij − π_j P_ji|.
pub fn check_detailed_balance(p: &TransitionMatrix, pi: &[f64]) -> Result<f64> {
    if pi.len() != p.n() {
        return Err(AcsError::DimensionMismatch { expected: p.n(), got: pi.len() });
    }
    let mut worst: f64 = 0.0;
    for i in 0..p.n() {
        for j in (i + 1)..p.n() {
            worst = worst.max((pi[i] * p.get(i, j) - pi[j] * p.get(j, i)).abs());
        }
    }
    Ok(worst)
}

/// Constants entering the minorization bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityConstants {
    /// Gradient-Lipschitz constant M.
    pub lipschitz: f64,
    /// Strong-concavity constant m.
    pub strong_concavity: f64,
    /// sup ‖θ − θ'‖ over the space.
    pub diam: f64,
    /// min over states of ‖∇U‖.
    pub grad_norm_at_a: f64,
}

impl ConcavityConstants {
    pub fn new(lipschitz: f64, strong_concavity: f64, diam: f64, grad_norm_at_a: f64) -> Result<Self> {
        if !(strong_concavity > 0.0 && lipschitz >= strong_concavity && diam > 0.0 && grad_norm_at_a >= 0.0) {
            return Err(AcsError::InvalidParameter(format!(
                "need M >= m > 0, diam > 0, |grad U(a)| >= 0; got M={lipschitz}, m={strong_concavity}, diam={diam}, g={grad_norm_at_a}"
            )));
        }
        Ok(Self {
            lipschitz,
            strong_concavity,
            diam,
            grad_norm_at_a,
        })
    }

    /// Exact constants for a quadratic target; the gradient-norm minimizer is
    /// found by exhaustive search.
    pub fn for_quadratic(target: &QuadraticTarget, cap: u128) -> Result<Self> {
        let space = target.space();
        let diam = space
            .domains()
            .iter()
            .map(|d| (d.max_value() as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        let grad_norm_at_a = enumerate_states(space, cap)?
            .iter()
            .map(|s| target.grad(s).iter().map(|g| g * g).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        Self::new(target.lipschitz(), target.strong_concavity(), diam, grad_norm_at_a)
    }
}

/// Which form of the minorization constant to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonVariant {
    /// exp{−(1/α + βM − βm/2)·diam² − ‖∇U(a)‖·diam}; the smaller constant.
    #[default]
    ProofFinal,
    /// exp{−(1/(2α) + βM − βm/2)·diam² − ‖∇U(a)‖·diam}.
    Stated,
}

/// Minorization constant ε_{β,α}. Requires α < 1/(βM).
pub fn minorization_epsilon(c: &ConcavityConstants, alpha: f64, beta: f64, variant: EpsilonVariant) -> Result<f64> {
    let params = ProposalParams::new(alpha, beta)?;
    if !(params.alpha * params.beta * c.lipschitz < 1.0) {
        return Err(AcsError::HypothesisViolated(format!(
            "step size {alpha} is not below 1/(beta M) = {}",
            1.0 / (beta * c.lipschitz)
        )));
    }
    let inv = match variant {
        EpsilonVariant::ProofFinal => 1.0 / alpha,
        EpsilonVariant::Stated => 1.0 / (2.0 * alpha),
    };
    let d = c.diam;
    Ok((-(inv + beta * c.lipschitz - beta * c.strong_concavity / 2.0) * d * d - c.grad_norm_at_a * d).exp())
}

/// ν(θ) ∝ exp(βU(θ)).
pub fn tempered_reference<T: Target + ?Sized>(target: &T, beta: f64, cap: u128) -> Result<Vec<f64>> {
    let (_, energies) = enumerate_with_energy(target, cap)?;
    let scaled: Vec<f64> = energies.iter().map(|u| beta * u).collect();
    let lz = crate::target::log_sum_exp(&scaled);
    Ok(scaled.iter().map(|u| (u - lz).exp()).collect())
}

/// min over (θ, θ') of P[θ, θ'] / ν(θ').
pub fn min_minorization_ratio(p: &TransitionMatrix, nu: &[f64]) -> f64 {
    let mut worst = f64::INFINITY;
    for i in 0..p.n() {
        for (j, &v) in nu.iter().enumerate() {
            worst = worst.min(p.get(i, j) / v);
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorizationCheck {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub epsilon_stated: f64,
    pub min_ratio: f64,
    /// min_ratio − ε (proof-final constant).
    pub margin: f64,
    pub margin_stated: f64,
}

impl MinorizationCheck {
    pub fn passed(&self) -> bool {
        self.margin >= 0.0
    }
}

/// Builds the exact kernel and compares its worst ratio against ε.
pub fn verify_minorization(target: &QuadraticTarget, alpha: f64, beta: f64, cap: u128) -> Result<MinorizationCheck> {
    let c = ConcavityConstants::for_quadratic(target, cap)?;
    let epsilon = minorization_epsilon(&c, alpha, beta, EpsilonVariant::ProofFinal)?;
    let epsilon_stated = minorization_epsilon(&c, alpha, beta, EpsilonVariant::Stated)?;
    let p = exact_kernel(target, ProposalParams::new(alpha, beta)?, cap)?;
    let nu = tempered_reference(target, beta, cap)?;
    let min_ratio = min_minorization_ratio(&p, &nu);
    Ok(MinorizationCheck {
        alpha,
        beta,
        epsilon,
        epsilon_stated,
        min_ratio,
        margin: min_ratio - epsilon,
        margin_stated: min_ratio - epsilon_stated,
    })
}

/// TV distance to π maximized over Dirac starts, for n = 1..=n_max.
pub fn tv_convergence_curve(p: &TransitionMatrix, pi: &[f64], n_max: usize) -> Result<Vec<f64>> {
    if pi.len() != p.n() {
        return Err(AcsError::DimensionMismatch { expected: p.n(), got: pi.len() });
    }
    let mut power = p.clone();
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            power = power.multiply(p)?;
        }
        let worst = (0..p.n())
            .map(|i| compensated_sum(power.row(i).iter().zip(pi).map(|(a, b)| (a - b).abs())) / 2.0)
            .fold(0.0, f64::max);
        out.push(worst);
    }
    Ok(out)
}

/// Second-largest eigenvalue modulus. Uses the symmetrized matrix
/// D^{1/2} P D^{-1/2} when `pi` is given (P must then be reversible), and a
/// general complex eigen-solve otherwise.
pub fn second_eigenvalue_modulus(p: &TransitionMatrix, pi: Option<&[f64]>) -> f64 {
    let n = p.n();
    if n < 2 {
        return 0.0;
    }
    let mut moduli: Vec<f64> = match pi {
        Some(pi) => {
            let s = DMatrix::from_fn(n, n, |i, j| {
                let a = pi[i].sqrt() * p.get(i, j) / pi[j].sqrt();
                let b = pi[j].sqrt() * p.get(j, i) / pi[i].sqrt();
                (a + b) / 2.0
            });
            SymmetricEigen::new(s).eigenvalues.iter().map(|l| l.abs()).collect()
        }
        None => p.to_dmatrix().complex_eigenvalues().iter().map(|l| l.norm()).collect(),
    };
    moduli.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    moduli[1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub alpha: f64,
    pub beta: f64,
    pub hypothesis_holds: bool,
    pub row_sum_residual: f64,
    pub stationarity_residual: f64,
    pub detailed_balance_residual: f64,
    pub minorization: Option<MinorizationCheck>,
    /// Largest (TV_n − (1−ε)ⁿ) over the curve; ≤ 0 means the bound holds.
    pub tv_bound_excess: Option<f64>,
    pub second_eigenvalue_modulus: f64,
    /// ε ≤ 1 − |λ₂| + 1e-9.
    pub spectral_consistent: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub hypothesis_holds: bool,
    pub stationarity_residual: f64,
    /// ε of the last schedule entry.
    pub epsilon_last: Option<f64>,
    pub min_ratio: f64,
    pub margin: Option<f64>,
    pub tv_bound_excess: Option<f64>,
    pub second_eigenvalue_modulus: f64,
    pub spectral_consistent: Option<bool>,
}

/// Largest violation of TV_n ≤ (1 − ε)ⁿ.
pub fn tv_bound_excess(curve: &[f64], epsilon: f64) -> f64 {
    curve
        .iter()
        .enumerate()
        .map(|(k, &tv)| tv - (1.0 - epsilon).powi(k as i32 + 1))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Every check for one (α, β) on a quadratic target.
pub fn analyze_kernel(target: &QuadraticTarget, params: ProposalParams, n_max: usize, cap: u128) -> Result<KernelReport> {
    let pi = exact_distribution(target, cap)?;
    let p = exact_kernel(target, params, cap)?;
    let c = ConcavityConstants::for_quadratic(target, cap)?;
    let hypothesis_holds = params.alpha * params.beta * c.lipschitz < 1.0;
    let slem = second_eigenvalue_modulus(&p, Some(&pi));
    let (minorization, tv_bound_excess_v, spectral) = if hypothesis_holds {
        let m = verify_minorization(target, params.alpha, params.beta, cap)?;
        let curve = tv_convergence_curve(&p, &pi, n_max)?;
        let excess = tv_bound_excess(&curve, m.epsilon);
        let spectral = m.epsilon <= 1.0 - slem + 1e-9;
        (Some(m), Some(excess), Some(spectral))
    } else {
        (None, None, None)
    };
    Ok(KernelReport {
        alpha: params.alpha,
        beta: params.beta,
        hypothesis_holds,
        row_sum_residual: p.max_row_sum_residual(),
        stationarity_residual: check_stationarity(&p, &pi)?,
        detailed_balance_residual: check_detailed_balance(&p, &pi)?,
        minorization,
        tv_bound_excess: tv_bound_excess_v,
        second_eigenvalue_modulus: slem,
        spectral_consistent: spectral,
    })
}

/// Checks for the composite kernel of one schedule pass.
pub fn analyze_cycle(target: &QuadraticTarget, schedule: &Schedule, n_max: usize, cap: u128) -> Result<CycleReport> {
    let pi = exact_distribution(target, cap)?;
    let c = ConcavityConstants::for_quadratic(target, cap)?;
    let hypothesis_holds = (0..schedule.steps_per_cycle()).all(|k| {
        let p = schedule.params_at(k);
        p.alpha * p.beta * c.lipschitz < 1.0
    });
    let p_hat = composite_cycle_kernel(target, schedule, cap)?;
    let last = schedule.params_at(schedule.steps_per_cycle() - 1);
    let nu = tempered_reference(target, last.beta, cap)?;
    let min_ratio = min_minorization_ratio(&p_hat, &nu);
    let slem = second_eigenvalue_modulus(&p_hat, None);
    let (epsilon_last, margin, excess, spectral) = if hypothesis_holds {
        let eps = minorization_epsilon(&c, last.alpha, last.beta, EpsilonVariant::ProofFinal)?;
        let curve = tv_convergence_curve(&p_hat, &pi, n_max)?;
        (
            Some(eps),
            Some(min_ratio - eps),
            Some(tv_bound_excess(&curve, eps)),
            Some(eps <= 1.0 - slem + 1e-9),
        )
    } else {
        (None, None, None, None)
    };
    Ok(CycleReport {
        alphas: schedule.alphas().to_vec(),
        betas: schedule.betas().to_vec(),
        hypothesis_holds,
        stationarity_residual: check_stationarity(&p_hat, &pi)?,
        epsilon_last,
        min_ratio,
        margin,
        tv_bound_excess: excess,
        second_eigenvalue_modulus: slem,
        spectral_consistent: spectral,
    })
}

/// Remark about the small-step limit of ε that the formula contradicts.
pub const SMALL_STEP_REMARK: &str = "the minorization constant tends to 0 (not 1) as the step size tends to 0; \
     a larger constant means faster convergence, so the remark that small steps give epsilon -> 1 \
     and slow convergence is inconsistent with the formula";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{sample_rbm_synthetic, BinaryTableTarget};
    use crate::rng::RngStream;

    fn quad1d() -> QuadraticTarget {
        QuadraticTarget::isotropic(vec![2.0], 0.5, 4).unwrap()
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn kernel_rows_and_reversibility() {
        let t = quad1d();
        let p = exact_kernel(&t, ProposalParams::new(0.8, 0.6).unwrap(), 1 << 20).unwrap();
        assert!(p.max_row_sum_residual() < 1e-12);
        let pi = exact_distribution(&t, 1 << 20).unwrap();
        assert!(check_stationarity(&p, &pi).unwrap() < 1e-12);
        assert!(check_detailed_balance(&p, &pi).unwrap() < 1e-12);
        let diag_ok = (0..p.n()).all(|i| {
            let sa = p.self_accept.as_ref().unwrap()[i];
            let rj = p.rejection.as_ref().unwrap()[i];
            (p.get(i, i) - sa - rj).abs() < 1e-15
        });
        assert!(diag_ok);
    }

    #[test]
    fn uniform_target_kernel_is_proposal() {
        let t = BinaryTableTarget::new(3, vec![0.0; 8]).unwrap();
        let params = ProposalParams::new(0.7, 0.8).unwrap();
        let p = exact_kernel(&t, params, 1 << 20).unwrap();
        let q = proposal_only_kernel(&t, params, 1 << 20).unwrap();
        for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_control_and_identity() {
        let t = quad1d();
        let pi = exact_distribution(&t, 1 << 20).unwrap();
        let q = proposal_only_kernel(&t, ProposalParams::new(3.0, 0.9).unwrap(), 1 << 20).unwrap();
        assert!(check_stationarity(&q, &pi).unwrap() > 1e-3);
        assert!(check_detailed_balance(&q, &pi).unwrap() > 1e-3);
        let id = TransitionMatrix::identity(5);
        assert_eq!(check_stationarity(&id, &pi).unwrap(), 0.0);
        assert_eq!(check_detailed_balance(&id, &pi).unwrap(), 0.0);
    }

    #[test]
    fn from_row_major_validates() {
        assert!(TransitionMatrix::from_row_major(2, vec![0.5, 0.5, 0.2, 0.8]).is_ok());
        assert!(TransitionMatrix::from_row_major(2, vec![0.5, 0.6, 0.2, 0.8]).is_err());
        assert!(TransitionMatrix::from_row_major(2, vec![1.5, -0.5, 0.2, 0.8]).is_err());
        assert!(TransitionMatrix::from_row_major(2, vec![1.0]).is_err());
    }

    #[test]
    fn baseline_kernels_are_reversible() {
        let mut rng = RngStream::new(4);
        let t = BinaryTableTarget::new(4, (0..16).map(|_| rng.normal(0.0, 1.0)).collect()).unwrap();
        let pi = exact_distribution(&t, 1 << 20).unwrap();
        for p in [random_walk_kernel(&t, 1 << 20).unwrap(), single_flip_kernel(&t, 2.0, 1 << 20).unwrap()] {
            assert!(p.max_row_sum_residual() < 1e-12);
            assert!(check_detailed_balance(&p, &pi).unwrap() < 1e-12);
        }
        let rbm = sample_rbm_synthetic(5, 3, &mut rng).unwrap();
        let p = block_gibbs_kernel(&rbm, 1 << 20).unwrap();
        let pi = exact_distribution(&rbm, 1 << 20).unwrap();
        assert!(p.max_row_sum_residual() < 1e-12);
        assert!(check_stationarity(&p, &pi).unwrap() < 1e-12);
        let ord = QuadraticTarget::isotropic(vec![1.0], 1.0, 3).unwrap();
        assert!(single_flip_kernel(&ord, 2.0, 1 << 20).is_err());
    }

    #[test]
    fn epsilon_formula() {
        let c = ConcavityConstants::new(0.5, 0.5, 4.0, 0.0).unwrap();
        let beta = 0.6;
        let alpha = 0.5 / (beta * 0.5);
        let eps = minorization_epsilon(&c, alpha, beta, EpsilonVariant::ProofFinal).unwrap();
        let hand = (-(1.0 / alpha + 0.3 - 0.15) * 16.0f64).exp();
        assert!((eps - hand).abs() < 1e-12 * hand.max(1e-300));
        let stated = minorization_epsilon(&c, alpha, beta, EpsilonVariant::Stated).unwrap();
        assert!(stated > eps);
        assert!(minorization_epsilon(&c, 1.0 / (beta * 0.5), beta, EpsilonVariant::ProofFinal).is_err());
        assert!(minorization_epsilon(&c, 1e-3, beta, EpsilonVariant::ProofFinal).unwrap() < 1e-300);
        let wider = ConcavityConstants::new(0.5, 0.5, 5.0, 0.0).unwrap();
        assert!(minorization_epsilon(&wider, alpha, beta, EpsilonVariant::ProofFinal).unwrap() < eps);
    }

    #[test]
    fn quadratic_constants() {
        let t = quad1d();
        let c = ConcavityConstants::for_quadratic(&t, 1 << 20).unwrap();
        assert_eq!((c.lipschitz, c.strong_concavity, c.diam, c.grad_norm_at_a), (0.5, 0.5, 4.0, 0.0));
    }

    #[test]
    fn minorization_holds_on_small_quadratic() {
        let t = quad1d();
        let m = verify_minorization(&t, 0.5 / (0.6 * 0.5), 0.6, 1 << 20).unwrap();
        assert!(m.passed(), "{m:?}");
        assert!(m.min_ratio > m.epsilon);
    }

    #[test]
    fn tv_curve_decreases() {
        let t = quad1d();
        let pi = exact_distribution(&t, 1 << 20).unwrap();
        let p = exact_kernel(&t, ProposalParams::new(1.0, 0.5).unwrap(), 1 << 20).unwrap();
        let curve = tv_convergence_curve(&p, &pi, 60).unwrap();
        assert!(curve.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(curve[59] < 1e-6);
    }

    #[test]
    fn single_step_cycle_is_its_kernel() {
        let t = quad1d();
        let s = Schedule::constant(1.2, 0.7, 1).unwrap();
        let a = composite_cycle_kernel(&t, &s, 1 << 20).unwrap();
        let b = exact_kernel(&t, ProposalParams::new(1.2, 0.7).unwrap(), 1 << 20).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn spectral_paths_agree_on_reversible_kernel() {
        let t = QuadraticTarget::isotropic(vec![1.0, 2.0], 0.4, 3).unwrap();
        let pi = exact_distribution(&t, 1 << 20).unwrap();
        let p = exact_kernel(&t, ProposalParams::new(1.0, 0.6).unwrap(), 1 << 20).unwrap();
        let a = second_eigenvalue_modulus(&p, Some(&pi));
        let b = second_eigenvalue_modulus(&p, None);
        assert!((a - b).abs() < 1e-8, "{a} {b}");
        assert!((0.0..1.0).contains(&a));
    }
}
