//! Cyclical step-size and balancing-parameter schedules.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{AcsError, Result};
use crate::proposal::ProposalParams;

/// How the cosine interpolation is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CosineConvention {
    /// `max((hi/2)(cos(π·(k mod s)/s) + 1), lo)`.
    #[default]
    HalfCosine,
    /// `max(hi·cos(π·(k mod s)/s) + 1, lo)`, without the halving.
    ShiftedCosine,
}

fn check_bounds(s: usize, hi: f64, lo: f64) -> Result<()> {
    if s == 0 {
        return Err(AcsError::InvalidSchedule("cycle length must be at least 1".into()));
    }
    if !(lo > 0.0) || !hi.is_finite() || !lo.is_finite() || hi < lo {
        return Err(AcsError::InvalidSchedule(format!("need upper >= lower > 0, got upper {hi}, lower {lo}")));
    }
    Ok(())
}

fn cosine_value(k: usize, s: usize, hi: f64, lo: f64, convention: CosineConvention) -> f64 {
    let c = (PI * (k % s) as f64 / s as f64).cos();
    let raw = match convention {
        CosineConvention::HalfCosine => hi / 2.0 * (c + 1.0),
        CosineConvention::ShiftedCosine => hi * c + 1.0,
    };
    raw.max(lo)
}

/// Step size for global step `k` of a cycle of length `s`.
pub fn step_size_at(k: usize, s: usize, alpha_max: f64, alpha_min: f64, convention: CosineConvention) -> Result<f64> {
    check_bounds(s, alpha_max, alpha_min)?;
    Ok(cosine_value(k, s, alpha_max, alpha_min, convention))
}

pub fn build_alpha_schedule(s: usize, alpha_max: f64, alpha_min: f64, convention: CosineConvention) -> Result<Vec<f64>> {
    check_bounds(s, alpha_max, alpha_min)?;
    Ok((0..s).map(|k| cosine_value(k, s, alpha_max, alpha_min, convention)).collect())
}

/// Cosine interpolation between `beta_max` and `beta_min`, used during burn-in.
pub fn naive_beta_schedule(s: usize, beta_max: f64, beta_min: f64) -> Result<Vec<f64>> {
    check_bounds(s, beta_max, beta_min)?;
    Ok((0..s)
        .map(|k| cosine_value(k, s, beta_max, beta_min, CosineConvention::HalfCosine))
        .collect())
}

/// One cycle of (α, β) pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct Schedule {
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule {
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl TryFrom<RawSchedule> for Schedule {
    type Error = AcsError;
    fn try_from(raw: RawSchedule) -> Result<Self> {
        Schedule::new(raw.alphas, raw.betas)
    }
}

impl From<Schedule> for RawSchedule {
    fn from(s: Schedule) -> Self {
        RawSchedule {
            alphas: s.alphas,
            betas: s.betas,
        }
    }
}

impl Schedule {
    /// Validates lengths, positivity, monotonicity and the β range.
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(AcsError::InvalidSchedule("empty schedule".into()));
        }
        if alphas.len() != betas.len() {
            return Err(AcsError::InvalidSchedule(format!(
                "{} step sizes but {} balancing parameters",
                alphas.len(),
                betas.len()
            )));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(AcsError::InvalidSchedule(format!("step size {a} is not positive and finite")));
        }
        if let Some(b) = betas.iter().find(|b| !(0.5..1.0).contains(*b)) {
            return Err(AcsError::InvalidSchedule(format!("balancing parameter {b} outside [0.5, 1)")));
        }
        if alphas.windows(2).any(|w| w[1] > w[0]) {
            return Err(AcsError::InvalidSchedule("step sizes must be non-increasing within a cycle".into()));
        }
        if betas.windows(2).any(|w| w[1] > w[0]) {
            return Err(AcsError::InvalidSchedule("balancing parameters must be non-increasing within a cycle".into()));
        }
        Ok(Self { alphas, betas })
    }

    pub fn constant(alpha: f64, beta: f64, s: usize) -> Result<Self> {
        Self::new(vec![alpha; s], vec![beta; s])
    }

    /// Cosine α schedule paired with an explicit β schedule.
    pub fn cyclical(alpha_max: f64, alpha_min: f64, betas: Vec<f64>, convention: CosineConvention) -> Result<Self> {
        let alphas = build_alpha_schedule(betas.len(), alpha_max, alpha_min, convention)?;
        Self::new(alphas, betas)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn steps_per_cycle(&self) -> usize {
        self.alphas.len()
    }

    /// Parameters for global step `k`.
    pub fn params_at(&self, k: usize) -> ProposalParams {
        let i = k % self.alphas.len();
        ProposalParams {
            alpha: self.alphas[i],
            beta: self.betas[i],
        }
    }
}
