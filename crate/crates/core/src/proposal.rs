//! The coordinatewise gradient-informed proposal and its Metropolis-Hastings
//! correction.
//!
//! Each coordinate is proposed independently from
//! `softmax_v( β·g_i·(v − θ_i) − (v − θ_i)² / (2α) )` over its whole domain,
//! where g = ∇U(θ). All densities are handled in log space.

use serde::{Deserialize, Serialize};

use crate::error::{AcsError, Result};
use crate::rng::RngStream;
use crate::space::State;
use crate::target::{log_softmax, Target};

/// Step size α and balancing parameter β.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalParams {
    pub alpha: f64,
    pub beta: f64,
}

impl ProposalParams {
    /// Requires α > 0 and 0.5 ≤ β < 1.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || alpha.is_nan() {
            return Err(AcsError::InvalidParameter(format!("step size must be positive, got {alpha}")));
        }
        if !(0.5..1.0).contains(&beta) {
            return Err(AcsError::InvalidParameter(format!("balancing parameter must be in [0.5, 1), got {beta}")));
        }
        Ok(Self { alpha, beta })
    }

    /// Constant-step locally balanced setting (β = 0.5).
    pub fn locally_balanced(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.5)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProposalOutcome {
    pub proposed: State,
    /// log Q(θ' | θ).
    pub forward_logprob: f64,
    /// log Q(θ | θ').
    pub reverse_logprob: f64,
}

/// Unnormalized logits over the `cardinality` values of one coordinate.
pub fn coordinate_logits(current: u32, cardinality: usize, grad_i: f64, params: ProposalParams) -> Vec<f64> {
    let inv_two_alpha = 1.0 / (2.0 * params.alpha);
    (0..cardinality)
        .map(|v| {
            let delta = v as f64 - current as f64;
            params.beta * grad_i * delta - delta * delta * inv_two_alpha
        })
        .collect()
}

pub fn coordinate_log_probs(current: u32, cardinality: usize, grad_i: f64, params: ProposalParams) -> Vec<f64> {
    log_softmax(&coordinate_logits(current, cardinality, grad_i, params))
}

/// Per-coordinate log-probability tables of Q(· | θ) given g = ∇U(θ).
pub fn proposal_tables<T: Target + ?Sized>(target: &T, state: &State, grad: &[f64], params: ProposalParams) -> Vec<Vec<f64>> {
    let space = target.space();
    state
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| coordinate_log_probs(v, space.domain(i).cardinality(), grad[i], params))
        .collect()
}

/// Exact log Q(to | from).
pub fn proposal_log_prob<T: Target + ?Sized>(target: &T, from: &State, to: &State, params: ProposalParams) -> f64 {
    let g = target.grad(from);
    let tables = proposal_tables(target, from, &g, params);
    tables.iter().zip(to.values()).map(|(t, &v)| t[v as usize]).sum()
}

fn draw_from_tables(tables: &[Vec<f64>], rng: &mut RngStream) -> (State, f64) {
    let mut values = Vec::with_capacity(tables.len());
    let mut logprob = 0.0;
    let mut probs = Vec::new();
    for t in tables {
        probs.clear();
        probs.extend(t.iter().map(|l| l.exp()));
        let k = rng.categorical(&probs);
        logprob += t[k];
        values.push(k as u32);
    }
    (State::new(values), logprob)
}

/// Draws θ' ~ Q(· | θ) and evaluates both proposal densities. The reverse
/// density uses a fresh gradient at θ'.
pub fn sample_proposal<T: Target + ?Sized>(
    state: &State,
    target: &T,
    params: ProposalParams,
    rng: &mut RngStream,
) -> ProposalOutcome {
    let g = target.grad(state);
    let tables = proposal_tables(target, state, &g, params);
    let (proposed, forward_logprob) = draw_from_tables(&tables, rng);
    let g_rev = target.grad(&proposed);
    let reverse_tables = proposal_tables(target, &proposed, &g_rev, params);
    let reverse_logprob = reverse_tables.iter().zip(state.values()).map(|(t, &v)| t[v as usize]).sum();
    ProposalOutcome {
        proposed,
        forward_logprob,
        reverse_logprob,
    }
}

/// Draws θ' ~ Q(· | θ) without evaluating the reverse density. Used where the
/// MH correction is deliberately skipped.
pub fn sample_uncorrected<T: Target + ?Sized>(state: &State, target: &T, params: ProposalParams, rng: &mut RngStream) -> State {
    let g = target.grad(state);
    let tables = proposal_tables(target, state, &g, params);
    draw_from_tables(&tables, rng).0
}

/// log of the MH ratio U(θ') − U(θ) + log Q(θ|θ') − log Q(θ'|θ), clipped at 0.
pub fn mh_log_accept<T: Target + ?Sized>(state: &State, outcome: &ProposalOutcome, target: &T) -> f64 {
    if outcome.proposed == *state {
        return 0.0;
    }
    let log_ratio = target.energy(&outcome.proposed) - target.energy(state) + outcome.reverse_logprob
        - outcome.forward_logprob;
    if log_ratio.is_nan() {
        f64::NEG_INFINITY
    } else {
        log_ratio.min(0.0)
    }
}

pub fn mh_accept_prob<T: Target + ?Sized>(state: &State, outcome: &ProposalOutcome, target: &T) -> f64 {
    mh_log_accept(state, outcome, target).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MhStep {
    pub state: State,
    pub accepted: bool,
    pub accept_prob: f64,
}

/// One full MH transition. Always consumes one uniform after the proposal.
pub fn mh_step<T: Target + ?Sized>(state: &State, target: &T, params: ProposalParams, rng: &mut RngStream) -> MhStep {
    let outcome = sample_proposal(state, target, params, rng);
    let accept_prob = mh_accept_prob(state, &outcome, target);
    let u = rng.uniform();
    if u < accept_prob {
        MhStep {
            state: outcome.proposed,
            accepted: true,
            accept_prob,
        }
    } else {
        MhStep {
            state: state.clone(),
            accepted: false,
            accept_prob,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{enumerate_states, DiscreteSpace};
    use crate::target::{exact_distribution, sigmoid};
    use crate::targets::{BinaryTableTarget, SyntheticMultimodal};

    fn p(alpha: f64, beta: f64) -> ProposalParams {
        ProposalParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ProposalParams::new(0.0, 0.5).is_err());
        assert!(ProposalParams::new(1.0, 0.49).is_err());
        assert!(ProposalParams::new(1.0, 1.0).is_err());
        assert!(ProposalParams::new(f64::NAN, 0.5).is_err());
        assert!(ProposalParams::new(1e-9, 0.99).is_ok());
    }

    #[test]
    fn logit_examples() {
        let l = coordinate_logits(3, 7, 1.7, p(0.8, 0.6));
        assert_eq!(l[3], 0.0);
        let lp = coordinate_log_probs(0, 2, 2.0, p(1.0, 0.5));
        // logistic(0.5·2·1 − 1/2)
        assert!((lp[1].exp() - sigmoid(0.5)).abs() < 1e-15);
        assert!((lp[1].exp() - 0.622_459_331_201_854_6).abs() < 1e-12);
        let flat = coordinate_log_probs(4, 9, 0.0, p(1e9, 0.5));
        for l in flat {
            assert!((l.exp() - 1.0 / 9.0).abs() < 1e-6);
        }
    }

    #[test]
    fn coordinate_probs_normalize() {
        for (cur, card, g) in [(0u32, 2usize, 3.0), (5, 451, -40.0), (200, 451, 0.1), (0, 3, 1e3)] {
            let s: f64 = coordinate_log_probs(cur, card, g, p(53.0, 0.7)).iter().map(|l| l.exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn global_limit_logits() {
        // α → ∞ leaves only the β·g·Δ term.
        let l = coordinate_logits(2, 6, 0.9, p(1e12, 0.99));
        for (v, lv) in l.iter().enumerate() {
            let target = 0.99 * 0.9 * (v as f64 - 2.0);
            assert!((lv - target).abs() < 1e-10);
        }
    }

    #[test]
    fn tiny_step_stays_put() {
        let t = SyntheticMultimodal::grid(25, 75.0, 0.15).unwrap();
        let x = State::new(vec![100, 200]);
        let mut rng = RngStream::new(1);
        let stays = (0..1000)
            .filter(|_| sample_proposal(&x, &t, p(1e-6, 0.5), &mut rng).proposed == x)
            .count();
        assert!(stays as f64 / 1000.0 > 0.999);
    }

    #[test]
    fn seeded_proposals_repeat() {
        let t = SyntheticMultimodal::grid(4, 10.0, 3.0).unwrap();
        let x = State::new(vec![5, 17]);
        let a = sample_proposal(&x, &t, p(20.0, 0.6), &mut RngStream::new(5));
        let b = sample_proposal(&x, &t, p(20.0, 0.6), &mut RngStream::new(5));
        assert_eq!(a, b);
    }

    #[test]
    fn binary_proposal_pmf_matches_product_softmax() {
        let t = BinaryTableTarget::new(2, vec![0.3, -1.1, 0.8, 2.0]).unwrap();
        let params = p(0.7, 0.65);
        for from in enumerate_states(t.space(), 16).unwrap() {
            let g = t.grad(&from);
            // brute force: unnormalized joint weights over {0,1}², normalized
            let weights: Vec<f64> = enumerate_states(t.space(), 16)
                .unwrap()
                .iter()
                .map(|to| {
                    (0..2)
                        .map(|i| {
                            let d = to.get(i) as f64 - from.get(i) as f64;
                            (params.beta * g[i] * d - d * d / (2.0 * params.alpha)).exp()
                        })
                        .product::<f64>()
                })
                .collect();
            let z: f64 = weights.iter().sum();
            for (k, to) in enumerate_states(t.space(), 16).unwrap().iter().enumerate() {
                let lq = proposal_log_prob(&t, &from, to, params);
                assert!((lq.exp() - weights[k] / z).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn identical_proposal_always_accepts() {
        let t = BinaryTableTarget::new(3, (0..8).map(|k| k as f64).collect()).unwrap();
        let x = State::new(vec![1, 0, 1]);
        let out = ProposalOutcome {
            proposed: x.clone(),
            forward_logprob: -0.3,
            reverse_logprob: -0.3,
        };
        assert_eq!(mh_accept_prob(&x, &out, &t), 1.0);
    }

    #[test]
    fn uniform_target_accepts_everything() {
        let t = BinaryTableTarget::new(4, vec![0.0; 16]).unwrap();
        let mut rng = RngStream::new(2);
        let mut x = State::new(vec![0, 1, 1, 0]);
        for _ in 0..200 {
            let step = mh_step(&x, &t, p(0.9, 0.8), &mut rng);
            assert!((step.accept_prob - 1.0).abs() < 1e-12);
            x = step.state;
        }
    }

    /// Straight-from-the-formula acceptance, independent of the module's
    /// table machinery.
    fn oracle_accept(t: &BinaryTableTarget, from: &State, to: &State, params: ProposalParams) -> f64 {
        let q = |a: &State, b: &State| -> f64 {
            let g = t.grad(a);
            let mut lp = 0.0;
            for i in 0..a.len() {
                let logit = |v: f64| {
                    let d = v - a.get(i) as f64;
                    params.beta * g[i] * d - d * d / (2.0 * params.alpha)
                };
                let (l0, l1) = (logit(0.0), logit(1.0));
                let lb = logit(b.get(i) as f64);
                lp += lb - (l0.exp() + l1.exp()).ln();
            }
            lp
        };
        let r = t.energy(to) - t.energy(from) + q(to, from) - q(from, to);
        r.exp().min(1.0)
    }

    #[test]
    fn acceptance_matches_oracle() {
        let mut rng = RngStream::new(77);
        let table: Vec<f64> = (0..8).map(|_| rng.normal(0.0, 1.5)).collect();
        let t = BinaryTableTarget::new(3, table).unwrap();
        let params = p(1.3, 0.72);
        let space = DiscreteSpace::binary(3).unwrap();
        for _ in 0..100 {
            let from = space.state_at(rng.index(8));
            let to = space.state_at(rng.index(8));
            let out = ProposalOutcome {
                forward_logprob: proposal_log_prob(&t, &from, &to, params),
                reverse_logprob: proposal_log_prob(&t, &to, &from, params),
                proposed: to.clone(),
            };
            let a = mh_accept_prob(&from, &out, &t);
            assert!((a - oracle_accept(&t, &from, &to, params)).abs() < 1e-12);
        }
    }

    #[test]
    fn long_chain_matches_exact_distribution() {
        let mut rng = RngStream::new(3);
        let table: Vec<f64> = (0..16).map(|_| rng.normal(0.0, 1.0)).collect();
        let t = BinaryTableTarget::new(4, table).unwrap();
        let pi = exact_distribution(&t, 1 << 20).unwrap();
        let params = p(1.0, 0.5);
        let mut x = t.space().origin();
        let mut counts = vec![0usize; 16];
        let n = 1_000_000;
        for _ in 0..n {
            x = mh_step(&x, &t, params, &mut rng).state;
            counts[t.space().index_of(&x)] += 1;
        }
        let tv: f64 = counts.iter().zip(&pi).map(|(&c, &q)| (c as f64 / n as f64 - q).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.02, "tv {tv}");
    }
}
