//! Sample-quality metrics: kernel MMD, smoothed empirical KL on enumerable
//! targets, mode coverage and running energy summaries.

use serde::{Deserialize, Serialize};

use crate::error::{AcsError, Result};
use crate::rng::RngStream;
use crate::space::State;
use crate::target::{exact_distribution, Target};
use crate::targets::SyntheticMultimodal;

/// Exponential-Hamming kernel `exp(−hamming(x, y) / (bandwidth · d))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub bandwidth: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { bandwidth: 1.0 }
    }
}

impl KernelSpec {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(AcsError::InvalidParameter(format!("kernel bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self { bandwidth })
    }

    pub fn eval(&self, x: &State, y: &State) -> f64 {
        let d = x.len().max(1) as f64;
        (-(x.hamming(y) as f64) / (self.bandwidth * d)).exp()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmdEstimator {
    /// V-statistic; zero for identical multisets, never negative.
    #[default]
    Biased,
    /// U-statistic; unbiased, may be negative.
    Unbiased,
}

fn kernel_sum(a: &[State], b: &[State], k: &KernelSpec, skip_diagonal: bool) -> f64 {
    let mut total = 0.0;
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if skip_diagonal && i == j {
                continue;
            }
            total += k.eval(x, y);
        }
    }
    total
}

/// Squared MMD between two sample sets.
pub fn mmd_sq(x: &[State], y: &[State], k: &KernelSpec, estimator: MmdEstimator) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(AcsError::EmptyInput("sample set"));
    }
    let d = x[0].len();
    if let Some(s) = x.iter().chain(y).find(|s| s.len() != d) {
        return Err(AcsError::DimensionMismatch { expected: d, got: s.len() });
    }
    let (n, m) = (x.len() as f64, y.len() as f64);
    let cross = kernel_sum(x, y, k, false) / (n * m);
    match estimator {
        MmdEstimator::Biased => {
            let kxx = kernel_sum(x, x, k, false) / (n * n);
            let kyy = kernel_sum(y, y, k, false) / (m * m);
            Ok((kxx + kyy - 2.0 * cross).max(0.0))
        }
        MmdEstimator::Unbiased => {
            if x.len() < 2 || y.len() < 2 {
                return Err(AcsError::InvalidParameter("unbiased MMD needs at least 2 samples per set".into()));
            }
            let kxx = kernel_sum(x, x, k, true) / (n * (n - 1.0));
            let kyy = kernel_sum(y, y, k, true) / (m * (m - 1.0));
            Ok(kxx + kyy - 2.0 * cross)
        }
    }
}

/// MMD² under random relabellings of the pooled sample.
pub fn mmd_permutation_null(
    x: &[State],
    y: &[State],
    k: &KernelSpec,
    estimator: MmdEstimator,
    n_permutations: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let mut pooled: Vec<State> = x.iter().chain(y).cloned().collect();
    let mut out = Vec::with_capacity(n_permutations);
    for _ in 0..n_permutations {
        for i in (1..pooled.len()).rev() {
            let j = rng.index(i + 1);
            pooled.swap(i, j);
        }
        out.push(mmd_sq(&pooled[..x.len()], &pooled[x.len()..], k, estimator)?);
    }
    Ok(out)
}

/// log₁₀ of an MMD² value, floored at 1e-12.
pub fn log10_mmd(value: f64) -> f64 {
    value.max(1e-12).log10()
}

/// KL(p̂ ‖ π) with p̂(θ) = (count(θ) + smoothing) / (n + smoothing·|Θ|).
/// Counts may be fractional.
pub fn kl_from_counts(counts: &[f64], pi: &[f64], smoothing: f64) -> Result<f64> {
    if counts.len() != pi.len() {
        return Err(AcsError::DimensionMismatch {
            expected: pi.len(),
            got: counts.len(),
        });
    }
    if smoothing < 0.0 {
        return Err(AcsError::InvalidParameter(format!("smoothing must be non-negative, got {smoothing}")));
    }
    let n: f64 = counts.iter().sum();
    let denom = n + smoothing * counts.len() as f64;
    if denom <= 0.0 {
        return Err(AcsError::EmptyInput("samples"));
    }
    let mut kl = 0.0;
    for (&c, &q) in counts.iter().zip(pi) {
        let p = (c + smoothing) / denom;
        if p > 0.0 {
            kl += p * (p.ln() - q.ln());
        }
    }
    Ok(kl.max(0.0))
}

/// Smoothed empirical KL against the exact distribution of an enumerable target.
pub fn empirical_kl<T: Target + ?Sized>(samples: &[State], target: &T, smoothing: f64, cap: u128) -> Result<f64> {
    let pi = exact_distribution(target, cap)?;
    let space = target.space();
    let mut counts = vec![0.0; pi.len()];
    for s in samples {
        space.validate(s)?;
        counts[space.index_of(s)] += 1.0;
    }
    kl_from_counts(&counts, &pi, smoothing)
}

pub const DEFAULT_KL_SMOOTHING: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCoverage {
    pub visited: usize,
    /// Step of the first record inside each mode's ball.
    pub first_visit: Vec<Option<usize>>,
}

fn within_linf(s: &State, mode: &[f64], radius: f64) -> bool {
    s.values().iter().zip(mode).all(|(&v, &m)| (v as f64 - m).abs() <= radius)
}

/// Distinct modes whose L∞ ball of `radius` is entered. `steps` labels each
/// state (usually the trace's record steps).
pub fn mode_coverage(states: &[State], steps: &[usize], modes: &[Vec<f64>], radius: f64) -> ModeCoverage {
    let mut first_visit = vec![None; modes.len()];
    for (s, &step) in states.iter().zip(steps) {
        for (slot, mode) in first_visit.iter_mut().zip(modes) {
            if slot.is_none() && within_linf(s, mode, radius) {
                *slot = Some(step);
            }
        }
    }
    ModeCoverage {
        visited: first_visit.iter().filter(|v| v.is_some()).count(),
        first_visit,
    }
}

/// Mean over visited modes of the TV distance between the samples that fall
/// in a mode's L∞ ball and π conditioned on that ball.
pub fn per_mode_tv(states: &[State], target: &SyntheticMultimodal, radius: f64) -> Option<f64> {
    let space = target.max_value() as i64;
    let r = radius.floor() as i64;
    let mut tvs = Vec::new();
    for mode in target.modes() {
        let centre: Vec<i64> = mode.iter().map(|m| m.round() as i64).collect();
        let lo: Vec<i64> = centre.iter().map(|c| (c - r).max(0)).collect();
        let hi: Vec<i64> = centre.iter().map(|c| (c + r).min(space)).collect();
        let width = (hi[0] - lo[0] + 1) as usize;
        let height = (hi[1] - lo[1] + 1) as usize;
        let mut counts = vec![0.0; width * height];
        let mut n = 0.0;
        for s in states {
            let (x, y) = (s.get(0) as i64, s.get(1) as i64);
            if x >= lo[0] && x <= hi[0] && y >= lo[1] && y <= hi[1] && within_linf(s, mode, radius) {
                counts[(x - lo[0]) as usize * height + (y - lo[1]) as usize] += 1.0;
                n += 1.0;
            }
        }
        if n == 0.0 {
            continue;
        }
        let mut logw = Vec::with_capacity(counts.len());
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                let s = State::new(vec![x as u32, y as u32]);
                logw.push(if within_linf(&s, mode, radius) {
                    target.energy(&s)
                } else {
                    f64::NEG_INFINITY
                });
            }
        }
        let lz = crate::target::log_sum_exp(&logw);
        let tv: f64 = counts
            .iter()
            .zip(&logw)
            .map(|(&c, &l)| (c / n - (l - lz).exp()).abs())
            .sum::<f64>()
            / 2.0;
        tvs.push(tv);
    }
    if tvs.is_empty() {
        None
    } else {
        Some(tvs.iter().sum::<f64>() / tvs.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub cumulative_mean: Vec<f64>,
    /// Mean of the trailing `window` values (fewer at the start).
    pub windowed_mean: Vec<f64>,
}

pub fn avg_energy_curve(energies: &[f64], window: usize) -> Result<EnergyCurve> {
    if window == 0 {
        return Err(AcsError::InvalidParameter("window must be at least 1".into()));
    }
    let mut cumulative_mean = Vec::with_capacity(energies.len());
    let mut windowed_mean = Vec::with_capacity(energies.len());
    let mut total = 0.0;
    for (i, &e) in energies.iter().enumerate() {
        total += e;
        cumulative_mean.push(total / (i + 1) as f64);
        let start = (i + 1).saturating_sub(window);
        let slice = &energies[start..=i];
        windowed_mean.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    Ok(EnergyCurve {
        cumulative_mean,
        windowed_mean,
    })
}

/// First index whose windowed mean is within `tol` of `reference`.
pub fn first_within(curve: &[f64], reference: f64, tol: f64) -> Option<usize> {
    curve.iter().position(|&v| (v - reference).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::DiscreteSpace;
    use crate::targets::BinaryTableTarget;

    fn random_binary(n: usize, d: usize, p: f64, rng: &mut RngStream) -> Vec<State> {
        (0..n)
            .map(|_| State::new((0..d).map(|_| rng.bernoulli(p) as u32).collect()))
            .collect()
    }

    #[test]
    fn kernel_range() {
        let k = KernelSpec::default();
        let a = State::new(vec![0, 1, 1, 0]);
        let b = State::new(vec![1, 1, 0, 0]);
        assert_eq!(k.eval(&a, &a), 1.0);
        assert!((k.eval(&a, &b) - (-0.5f64).exp()).abs() < 1e-15);
        assert!(KernelSpec::new(0.0).is_err());
    }

    #[test]
    fn identical_sets_have_zero_biased_mmd() {
        let x = random_binary(50, 6, 0.3, &mut RngStream::new(1));
        let mut y = x.clone();
        y.reverse();
        assert!(mmd_sq(&x, &y, &KernelSpec::default(), MmdEstimator::Biased).unwrap().abs() < 1e-12);
    }

    #[test]
    fn symmetric_and_errors() {
        let mut rng = RngStream::new(2);
        let x = random_binary(30, 5, 0.3, &mut rng);
        let y = random_binary(40, 5, 0.6, &mut rng);
        for est in [MmdEstimator::Biased, MmdEstimator::Unbiased] {
            let a = mmd_sq(&x, &y, &KernelSpec::default(), est).unwrap();
            let b = mmd_sq(&y, &x, &KernelSpec::default(), est).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(mmd_sq(&[], &y, &KernelSpec::default(), MmdEstimator::Biased).is_err());
        assert!(mmd_sq(&x[..1], &y, &KernelSpec::default(), MmdEstimator::Unbiased).is_err());
        assert!(mmd_sq(&x, &[State::new(vec![0, 1])], &KernelSpec::default(), MmdEstimator::Biased).is_err());
    }

    #[test]
    fn log_floor() {
        assert_eq!(log10_mmd(0.0), -12.0);
        assert!((log10_mmd(1e-3) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn kl_closed_forms() {
        // All mass on one of two equally likely states; smoothing → 0.
        let kl = kl_from_counts(&[1e6, 0.0], &[0.5, 0.5], 1e-9).unwrap();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-6);
        let pi = [0.1, 0.2, 0.3, 0.4];
        assert!(kl_from_counts(&pi, &pi, 0.0).unwrap().abs() < 1e-15);
        assert!(kl_from_counts(&[1.0], &pi, 0.5).is_err());
        assert!(kl_from_counts(&[0.0, 0.0], &[0.5, 0.5], 0.0).is_err());
    }

    #[test]
    fn empirical_kl_is_nonnegative() {
        let t = BinaryTableTarget::new(3, vec![0.0, 1.0, -1.0, 0.5, 0.2, 0.0, 2.0, -0.3]).unwrap();
        let space = DiscreteSpace::binary(3).unwrap();
        let mut rng = RngStream::new(5);
        let samples: Vec<State> = (0..37).map(|_| space.state_at(rng.index(8))).collect();
        assert!(empirical_kl(&samples, &t, 0.5, 1 << 20).unwrap() >= 0.0);
        assert!(empirical_kl(&samples, &t, 0.5, 4).is_err());
    }

    #[test]
    fn coverage_examples() {
        let modes = vec![vec![10.0, 10.0], vec![50.0, 50.0], vec![90.0, 10.0]];
        let at = |x, y| State::new(vec![x, y]);
        let constant = vec![at(10, 10); 5];
        let c = mode_coverage(&constant, &[1, 2, 3, 4, 5], &modes, 5.0);
        assert_eq!(c.visited, 1);
        assert_eq!(c.first_visit, vec![Some(1), None, None]);
        let tour = vec![at(12, 8), at(30, 30), at(50, 55), at(88, 14)];
        let c = mode_coverage(&tour, &[1, 2, 3, 4], &modes, 5.0);
        assert_eq!(c.visited, 3);
        assert_eq!(c.first_visit, vec![Some(1), Some(3), Some(4)]);
        let off = vec![vec![10.5, 10.5]];
        assert_eq!(mode_coverage(&constant, &[1, 2, 3, 4, 5], &off, 0.0).visited, 0);
    }

    #[test]
    fn per_mode_tv_perfect_and_poor() {
        let t = SyntheticMultimodal::grid(1, 10.0, 1.0).unwrap();
        let at = |x, y| State::new(vec![x, y]);
        // Only the centre: misses the neighbours' share of the ball.
        let tv = per_mode_tv(&vec![at(7, 7); 100], &t, 2.0).unwrap();
        assert!(tv > 0.3);
        assert!(per_mode_tv(&[at(0, 0)], &t, 2.0).is_none());
    }

    #[test]
    fn energy_curve() {
        let c = avg_energy_curve(&[2.0; 6], 3).unwrap();
        assert_eq!(c.cumulative_mean, vec![2.0; 6]);
        assert_eq!(c.windowed_mean, vec![2.0; 6]);
        let c = avg_energy_curve(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(c.cumulative_mean, vec![1.0, 1.5, 2.0, 2.5]);
        assert_eq!(c.windowed_mean, vec![1.0, 1.5, 2.5, 3.5]);
        assert_eq!(first_within(&c.windowed_mean, 3.0, 0.5), Some(2));
        assert!(avg_energy_curve(&[1.0], 0).is_err());
    }
}
