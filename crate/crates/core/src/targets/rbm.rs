use crate::error::{AcsError, Result};
use crate::rng::RngStream;
use crate::space::{DiscreteSpace, State};
use crate::target::{log_sum_exp, sigmoid, softplus, Target};

/// Binary restricted Boltzmann machine with joint
/// log p(x, h) = hᵀWx + bᵀx + aᵀh − log Z.
///
/// As a sampling target it exposes the hidden-marginalized free energy
/// U(x) = Σ_j softplus((Wx + a)_j) + bᵀx.
#[derive(Clone, Debug, PartialEq)]
pub struct RbmModel {
    n_visible: usize,
    n_hidden: usize,
    /// Row-major, `n_hidden × n_visible`.
    w: Vec<f64>,
    hidden_bias: Vec<f64>,
    visible_bias: Vec<f64>,
    space: DiscreteSpace,
}

impl RbmModel {
    pub fn new(w: Vec<f64>, hidden_bias: Vec<f64>, visible_bias: Vec<f64>) -> Result<Self> {
        let n_hidden = hidden_bias.len();
        let n_visible = visible_bias.len();
        if n_visible == 0 {
            return Err(AcsError::EmptyInput("visible units"));
        }
        if w.len() != n_hidden * n_visible {
            return Err(AcsError::DimensionMismatch {
                expected: n_hidden * n_visible,
                got: w.len(),
            });
        }
        if w.iter().chain(&hidden_bias).chain(&visible_bias).any(|v| !v.is_finite()) {
            return Err(AcsError::InvalidParameter("RBM parameters must be finite".into()));
        }
        Ok(Self {
            n_visible,
            n_hidden,
            w,
            hidden_bias,
            visible_bias,
            space: DiscreteSpace::binary(n_visible)?,
        })
    }

    pub fn zeros(n_visible: usize, n_hidden: usize) -> Result<Self> {
        Self::new(vec![0.0; n_visible * n_hidden], vec![0.0; n_hidden], vec![0.0; n_visible])
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.visible_bias
    }

    /// Mutable views `(W, a, b)` for in-place parameter updates.
    pub fn params_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.w, &mut self.hidden_bias, &mut self.visible_bias)
    }

    pub fn weight(&self, j: usize, i: usize) -> f64 {
        self.w[j * self.n_visible + i]
    }

    /// Wx + a.
    pub fn hidden_preactivation(&self, x: &[f64]) -> Vec<f64> {
        self.w
            .chunks_exact(self.n_visible)
            .zip(&self.hidden_bias)
            .map(|(row, a)| a + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    /// Wᵀh + b.
    pub fn visible_preactivation(&self, h: &[f64]) -> Vec<f64> {
        let mut out = self.visible_bias.clone();
        for (row, &hj) in self.w.chunks_exact(self.n_visible).zip(h) {
            if hj != 0.0 {
                for (o, w) in out.iter_mut().zip(row) {
                    *o += hj * w;
                }
            }
        }
        out
    }

    pub fn free_energy(&self, x: &[f64]) -> f64 {
        let hidden: f64 = self.hidden_preactivation(x).into_iter().map(softplus).sum();
        hidden + self.visible_bias.iter().zip(x).map(|(b, x)| b * x).sum::<f64>()
    }

    /// hᵀWx + bᵀx + aᵀh.
    pub fn joint_log_unnormalized(&self, x: &[f64], h: &[f64]) -> f64 {
        let pre = self.hidden_preactivation(x);
        let hidden: f64 = pre.iter().zip(h).map(|(p, h)| p * h).sum();
        hidden + self.visible_bias.iter().zip(x).map(|(b, x)| b * x).sum::<f64>()
    }

    /// Free energy of the hidden layer with x marginalized:
    /// aᵀh + Σ_i softplus((Wᵀh + b)_i).
    pub fn hidden_free_energy(&self, h: &[f64]) -> f64 {
        let vis: f64 = self.visible_preactivation(h).into_iter().map(softplus).sum();
        vis + self.hidden_bias.iter().zip(h).map(|(a, h)| a * h).sum::<f64>()
    }

    /// One sweep: h ~ p(h | x), then x' ~ p(x | h). Hidden units are drawn
    /// first in index order, then visible units.
    pub fn block_gibbs_step(&self, x: &State, rng: &mut RngStream) -> State {
        let h = self.sample_hidden(&x.to_real(), rng);
        self.sample_visible(&h, rng)
    }

    pub fn sample_hidden(&self, x: &[f64], rng: &mut RngStream) -> Vec<f64> {
        self.hidden_preactivation(x)
            .into_iter()
            .map(|z| if rng.bernoulli(sigmoid(z)) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn sample_visible(&self, h: &[f64], rng: &mut RngStream) -> State {
        State::new(
            self.visible_preactivation(h)
                .into_iter()
                .map(|z| rng.bernoulli(sigmoid(z)) as u32)
                .collect(),
        )
    }

    /// Copy with W and a multiplied by `t` and b untouched.
    pub fn tempered(&self, t: f64) -> RbmModel {
        RbmModel {
            n_visible: self.n_visible,
            n_hidden: self.n_hidden,
            w: self.w.iter().map(|w| w * t).collect(),
            hidden_bias: self.hidden_bias.iter().map(|a| a * t).collect(),
            visible_bias: self.visible_bias.clone(),
            space: self.space.clone(),
        }
    }

    /// Exact log Z, enumerating whichever layer is smaller.
    pub fn exact_log_partition(&self, max_enumerated_units: usize) -> Result<f64> {
        let small = self.n_visible.min(self.n_hidden);
        if small > max_enumerated_units {
            return Err(AcsError::EnumerationCapExceeded {
                states: 1u128 << small.min(127),
                cap: 1u128 << max_enumerated_units,
            });
        }
        if self.n_visible <= self.n_hidden {
            Ok(log_sum_exp(&binary_configurations(self.n_visible).map(|x| self.free_energy(&x)).collect::<Vec<_>>()))
        } else {
            Ok(log_sum_exp(&binary_configurations(self.n_hidden).map(|h| self.hidden_free_energy(&h)).collect::<Vec<_>>()))
        }
    }

}

/// All 2^n binary vectors as reals, lexicographic with index 0 slowest.
pub(crate) fn binary_configurations(n: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..1usize << n).map(move |k| (0..n).map(|i| ((k >> (n - 1 - i)) & 1) as f64).collect())
}

impl Target for RbmModel {
    fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    fn energy_at(&self, x: &[f64]) -> f64 {
        self.free_energy(x)
    }

    /// Wᵀσ(Wx + a) + b.
    fn grad_at(&self, x: &[f64]) -> Vec<f64> {
        let probs: Vec<f64> = self.hidden_preactivation(x).into_iter().map(sigmoid).collect();
        let mut g = self.visible_bias.clone();
        for (row, p) in self.w.chunks_exact(self.n_visible).zip(probs) {
            for (gi, w) in g.iter_mut().zip(row) {
                *gi += p * w;
            }
        }
        g
    }

    fn as_rbm(&self) -> Option<&RbmModel> {
        Some(self)
    }
}

/// Random desk-scale RBM: W ~ N(0, 0.2²), biases ~ N(0, 0.1²).
/// Draw order: W row-major, then a, then b.
pub fn sample_rbm_synthetic(n_visible: usize, n_hidden: usize, rng: &mut RngStream) -> Result<RbmModel> {
    sample_rbm_scaled(n_visible, n_hidden, 0.2, 0.1, rng)
}

/// As [`sample_rbm_synthetic`] with W ~ N(0, weight_std²) and biases ~ N(0, bias_std²).
pub fn sample_rbm_scaled(
    n_visible: usize,
    n_hidden: usize,
    weight_std: f64,
    bias_std: f64,
    rng: &mut RngStream,
) -> Result<RbmModel> {
    let w = (0..n_visible * n_hidden).map(|_| rng.normal(0.0, weight_std)).collect();
    let a = (0..n_hidden).map(|_| rng.normal(0.0, bias_std)).collect();
    let b = (0..n_visible).map(|_| rng.normal(0.0, bias_std)).collect();
    RbmModel::new(w, a, b)
}
