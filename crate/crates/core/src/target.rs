//! The target-model contract and numerics shared by every target.
//!
//! A target is π(θ) ∝ exp(U(θ)) on a finite [`DiscreteSpace`], where U extends
//! to a differentiable function on the reals. Samplers only ever see U and ∇U.

use crate::error::Result;
use crate::space::{enumerate_states, DiscreteSpace, State};
use crate::targets::RbmModel;

pub trait Target: Send + Sync {
    fn space(&self) -> &DiscreteSpace;

    /// U at a real point (the differentiable extension).
    fn energy_at(&self, x: &[f64]) -> f64;

    /// ∇U at a real point.
    fn grad_at(&self, x: &[f64]) -> Vec<f64>;

    fn energy(&self, s: &State) -> f64 {
        self.energy_at(&s.to_real())
    }

    fn grad(&self, s: &State) -> Vec<f64> {
        self.grad_at(&s.to_real())
    }

    /// Present when the target is an RBM, which unlocks Block Gibbs.
    fn as_rbm(&self) -> Option<&RbmModel> {
        None
    }
}

impl<T: Target + ?Sized> Target for &T {
    fn space(&self) -> &DiscreteSpace {
        (**self).space()
    }
    fn energy_at(&self, x: &[f64]) -> f64 {
        (**self).energy_at(x)
    }
    fn grad_at(&self, x: &[f64]) -> Vec<f64> {
        (**self).grad_at(x)
    }
    fn energy(&self, s: &State) -> f64 {
        (**self).energy(s)
    }
    fn grad(&self, s: &State) -> Vec<f64> {
        (**self).grad(s)
    }
    fn as_rbm(&self) -> Option<&RbmModel> {
        (**self).as_rbm()
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// log(1 + e^z) without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Normalized log-probabilities for the given logits.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|&l| l - lse).collect()
}

/// log Z = log Σ_θ exp(U(θ)) by enumeration.
pub fn exact_log_partition<T: Target + ?Sized>(target: &T, cap: u128) -> Result<f64> {
    let states = enumerate_states(target.space(), cap)?;
    let energies: Vec<f64> = states.iter().map(|s| target.energy(s)).collect();
    Ok(log_sum_exp(&energies))
}

/// Exact π over the enumeration order of the target's space.
pub fn exact_distribution<T: Target + ?Sized>(target: &T, cap: u128) -> Result<Vec<f64>> {
    let states = enumerate_states(target.space(), cap)?;
    let energies: Vec<f64> = states.iter().map(|s| target.energy(s)).collect();
    let lz = log_sum_exp(&energies);
    Ok(energies.iter().map(|&u| (u - lz).exp()).collect())
}

/// Largest relative error between the analytic gradient and central
/// differences with step `h`, at the real point `x`.
///
/// The error for each coordinate is |g − fd| / max(1, |fd|).
pub fn gradient_check<T: Target + ?Sized>(target: &T, x: &[f64], h: f64) -> f64 {
    let g = target.grad_at(x);
    let mut worst = 0.0f64;
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let up = target.energy_at(&xp);
        xp[i] = x[i] - h;
        let down = target.energy_at(&xp);
        xp[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((g[i] - fd).abs() / fd.abs().max(1.0));
    }
    worst
}
