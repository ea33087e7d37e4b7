use serde::{Deserialize, Serialize};

use crate::error::{AcsError, Result};
use crate::space::DiscreteSpace;
use crate::target::{log_sum_exp, Target};

/// Mixture of isotropic bumps on an integer grid `{0..=max}^d`:
///
/// U(θ) = log Σ_i w_i exp(−‖θ − μ_i‖² / (2σ²))
///
/// With `literal_sign` the exponent's sign is flipped, which puts the mass
/// far from the μ_i. It is only useful for checking that variant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticMultimodal {
    modes: Vec<Vec<f64>>,
    sigma_sq: f64,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    space: DiscreteSpace,
    literal_sign: bool,
}

impl SyntheticMultimodal {
    pub fn new(
        modes: Vec<Vec<f64>>,
        sigma_sq: f64,
        weights: Option<Vec<f64>>,
        max_value: u32,
    ) -> Result<Self> {
        if modes.is_empty() {
            return Err(AcsError::EmptyInput("modes"));
        }
        let d = modes[0].len();
        let space = DiscreteSpace::ordinal(d, max_value)?;
        if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
            return Err(AcsError::InvalidParameter(format!("sigma_sq must be positive, got {sigma_sq}")));
        }
        for m in &modes {
            if m.len() != d {
                return Err(AcsError::DimensionMismatch { expected: d, got: m.len() });
            }
            if m.iter().any(|&c| !(0.0..=max_value as f64).contains(&c)) {
                return Err(AcsError::InvalidParameter(format!("mode {m:?} outside [0, {max_value}]^{d}")));
            }
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; modes.len()]);
        if weights.len() != modes.len() {
            return Err(AcsError::DimensionMismatch { expected: modes.len(), got: weights.len() });
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(AcsError::InvalidParameter("weights must be nonnegative with positive sum".into()));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            modes,
            sigma_sq,
            log_weights,
            weights,
            space,
            literal_sign: false,
        })
    }

    /// Evenly spaced `num_modes` grid with equal weights.
    pub fn grid(num_modes: usize, spacing: f64, sigma_sq: f64) -> Result<Self> {
        let (modes, max) = build_grid_modes(num_modes, spacing)?;
        Self::new(modes, sigma_sq, None, max)
    }

    pub fn with_literal_sign(mut self, literal: bool) -> Self {
        self.literal_sign = literal;
        self
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn max_value(&self) -> u32 {
        self.space.domain(0).max_value()
    }

    fn component_logits(&self, x: &[f64]) -> Vec<f64> {
        let sign = if self.literal_sign { 1.0 } else { -1.0 };
        self.modes
            .iter()
            .zip(&self.log_weights)
            .map(|(mu, lw)| {
                let d2: f64 = x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
                lw + sign * d2 / (2.0 * self.sigma_sq)
            })
            .collect()
    }
}

impl Target for SyntheticMultimodal {
    fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    fn energy_at(&self, x: &[f64]) -> f64 {
        log_sum_exp(&self.component_logits(x))
    }

    fn grad_at(&self, x: &[f64]) -> Vec<f64> {
        let logits = self.component_logits(x);
        let lse = log_sum_exp(&logits);
        let sign = if self.literal_sign { 1.0 } else { -1.0 };
        let mut g = vec![0.0; x.len()];
        for (mu, l) in self.modes.iter().zip(&logits) {
            let p = (l - lse).exp();
            if p == 0.0 {
                continue;
            }
            for (gi, (xi, mi)) in g.iter_mut().zip(x.iter().zip(mu)) {
                *gi += p * sign * (xi - mi) / self.sigma_sq;
            }
        }
        g
    }
}

/// Square grid of modes on `{0..=N}²` with N = (√num_modes + 1)·spacing and
/// μ_{i,j} = N/(√num_modes + 2)·(i + 1, j + 1), rounded to the nearest integer.
/// Modes are listed row-major (i outer).
pub fn build_grid_modes(num_modes: usize, spacing: f64) -> Result<(Vec<Vec<f64>>, u32)> {
    let side = (num_modes as f64).sqrt().round() as usize;
    if num_modes == 0 || side * side != num_modes {
        return Err(AcsError::InvalidParameter(format!("num_modes {num_modes} is not a positive perfect square")));
    }
    if !(spacing > 0.0) {
        return Err(AcsError::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    let max = ((side as f64 + 1.0) * spacing).round();
    let step = max / (side as f64 + 2.0);
    let mut modes = Vec::with_capacity(num_modes);
    for i in 0..side {
        for j in 0..side {
            modes.push(vec![(step * (i + 1) as f64).round(), (step * (j + 1) as f64).round()]);
        }
    }
    Ok((modes, max as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::State;
    use crate::target::gradient_check;

    #[test]
    fn grid_construction() {
        let (modes, n) = build_grid_modes(25, 75.0).unwrap();
        assert_eq!(n, 450);
        assert_eq!(modes.len(), 25);
        assert_eq!(modes[0], vec![64.0, 64.0]);
        assert_eq!(modes[24], vec![321.0, 321.0]);
        let (modes, n) = build_grid_modes(1, 10.0).unwrap();
        assert_eq!(n, 20);
        assert_eq!(modes, vec![vec![7.0, 7.0]]);
        assert!(build_grid_modes(24, 75.0).is_err());
        assert!(build_grid_modes(0, 75.0).is_err());
    }

    #[test]
    fn single_mode_energy_and_grad() {
        let t = SyntheticMultimodal::new(vec![vec![3.0, 4.0]], 0.5, None, 10).unwrap();
        let at_mode = State::new(vec![3, 4]);
        assert_eq!(t.energy(&at_mode), 0.0);
        assert_eq!(t.grad(&at_mode), vec![0.0, 0.0]);
    }

    #[test]
    fn equidistant_two_modes() {
        let s2 = 2.0;
        let t = SyntheticMultimodal::new(vec![vec![2.0, 5.0], vec![8.0, 5.0]], s2, None, 10).unwrap();
        // (5, 1) is at squared distance 9 + 16 = 25 from both.
        let x = State::new(vec![5, 1]);
        let expected = 2f64.ln() - 25.0 / (2.0 * s2);
        assert!((t.energy(&x) - expected).abs() < 1e-12);
        let g = t.grad(&x);
        assert!(g[0].abs() < 1e-12, "component across the bisector cancels: {g:?}");
        assert!(g[1] > 0.0);
    }

    #[test]
    fn grid_energy_matches_scalar_sum() {
        let t = SyntheticMultimodal::grid(25, 75.0, 0.15).unwrap();
        let x = State::new(vec![64, 64]);
        let mut acc = 0.0f64;
        for mu in t.modes() {
            let d2 = (64.0 - mu[0]).powi(2) + (64.0 - mu[1]).powi(2);
            acc += (-d2 / 0.3).exp();
        }
        assert!((t.energy(&x) - acc.ln()).abs() < 1e-12);
        let x = State::new(vec![100, 70]);
        let mut terms = vec![];
        for mu in t.modes() {
            let d2 = (100.0 - mu[0]).powi(2) + (70.0 - mu[1]).powi(2);
            terms.push(-d2 / 0.3);
        }
        let m = terms.iter().cloned().fold(f64::MIN, f64::max);
        let lse = m + terms.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        assert!((t.energy(&x) - lse).abs() < 1e-9 * lse.abs());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = SyntheticMultimodal::new(
            vec![vec![3.0, 3.0], vec![9.0, 4.0], vec![5.0, 10.0]],
            4.0,
            Some(vec![1.0, 2.0, 0.5]),
            12,
        )
        .unwrap();
        for x in [[0.0, 0.0], [5.0, 5.0], [11.0, 2.0], [6.0, 7.0]] {
            assert!(gradient_check(&t, &x, 1e-4) < 1e-5);
        }
        let lit = t.clone().with_literal_sign(true);
        assert!(gradient_check(&lit, &[4.0, 6.0], 1e-4) < 1e-5);
    }

    #[test]
    fn weight_scaling_shifts_energy() {
        let modes = vec![vec![2.0, 2.0], vec![7.0, 6.0]];
        let a = SyntheticMultimodal::new(modes.clone(), 1.5, Some(vec![1.0, 3.0]), 9).unwrap();
        let b = SyntheticMultimodal::new(modes, 1.5, Some(vec![5.0, 15.0]), 9).unwrap();
        for x in [[0u32, 0], [3, 4], [9, 9]] {
            let s = State::new(x.to_vec());
            assert!((b.energy(&s) - a.energy(&s) - 5f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SyntheticMultimodal::new(vec![vec![11.0, 0.0]], 1.0, None, 10).is_err());
        assert!(SyntheticMultimodal::new(vec![vec![1.0, 0.0]], 0.0, None, 10).is_err());
        assert!(SyntheticMultimodal::new(vec![vec![1.0, 0.0]], 1.0, Some(vec![0.0]), 10).is_err());
        assert!(SyntheticMultimodal::new(vec![vec![1.0, 0.0]], 1.0, Some(vec![1.0, 1.0]), 10).is_err());
    }
}
