use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{AcsError, Result};
use crate::space::DiscreteSpace;
use crate::target::Target;

/// U(θ) = −½ (θ − c)ᵀ H (θ − c) with H symmetric positive definite.
///
/// ∇U is M-Lipschitz with M = λ_max(H) and U is m-strongly concave with
/// m = λ_min(H), which makes this the reference target for the ergodicity
/// checks in [`crate::theory`].
#[derive(Clone, Debug)]
pub struct QuadraticTarget {
    center: Vec<f64>,
    hessian: Vec<f64>,
    eig_min: f64,
    eig_max: f64,
    space: DiscreteSpace,
}

impl QuadraticTarget {
    /// `hessian` is row-major `d × d`; the space is `{0..=max_value}^d`.
    pub fn new(center: Vec<f64>, hessian: Vec<f64>, max_value: u32) -> Result<Self> {
        let d = center.len();
        if hessian.len() != d * d {
            return Err(AcsError::DimensionMismatch { expected: d * d, got: hessian.len() });
        }
        for i in 0..d {
            for j in 0..i {
                if (hessian[i * d + j] - hessian[j * d + i]).abs() > 1e-12 {
                    return Err(AcsError::InvalidParameter("hessian must be symmetric".into()));
                }
            }
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &hessian));
        let eig_min = eig.eigenvalues.min();
        let eig_max = eig.eigenvalues.max();
        if !(eig_min > 0.0) {
            return Err(AcsError::InvalidParameter(format!(
                "hessian must be positive definite (min eigenvalue {eig_min})"
            )));
        }
        Ok(Self {
            center,
            hessian,
            eig_min,
            eig_max,
            space: DiscreteSpace::ordinal(d, max_value)?,
        })
    }

    /// Isotropic H = curvature · I.
    pub fn isotropic(center: Vec<f64>, curvature: f64, max_value: u32) -> Result<Self> {
        let d = center.len();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = curvature;
        }
        Self::new(center, h, max_value)
    }

    /// Gradient-Lipschitz constant M = λ_max(H).
    pub fn lipschitz(&self) -> f64 {
        self.eig_max
    }

    /// Strong-concavity constant m = λ_min(H).
    pub fn strong_concavity(&self) -> f64 {
        self.eig_min
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    fn h_times(&self, v: &[f64]) -> Vec<f64> {
        let d = v.len();
        (0..d)
            .map(|i| (0..d).map(|j| self.hessian[i * d + j] * v[j]).sum())
            .collect()
    }
}

impl Target for QuadraticTarget {
    fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    fn energy_at(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let hd = self.h_times(&diff);
        -0.5 * diff.iter().zip(&hd).map(|(a, b)| a * b).sum::<f64>()
    }

    fn grad_at(&self, x: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        self.h_times(&diff).into_iter().map(|v| -v).collect()
    }
}
