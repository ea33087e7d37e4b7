use crate::error::{AcsError, Result};
use crate::space::DiscreteSpace;
use crate::target::Target;

/// Arbitrary energy table on `{0,1}^d`, extended to the reals by its unique
/// multilinear interpolant. The table follows the enumeration order of the
/// space (coordinate 0 slowest).
#[derive(Clone, Debug)]
pub struct BinaryTableTarget {
    table: Vec<f64>,
    space: DiscreteSpace,
}

impl BinaryTableTarget {
    pub fn new(dims: usize, table: Vec<f64>) -> Result<Self> {
        if dims > 20 {
            return Err(AcsError::InvalidParameter("table targets are limited to 20 dims".into()));
        }
        if table.len() != 1 << dims {
            return Err(AcsError::DimensionMismatch { expected: 1 << dims, got: table.len() });
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(AcsError::InvalidParameter("energies must be finite".into()));
        }
        Ok(Self {
            table,
            space: DiscreteSpace::binary(dims)?,
        })
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    fn corner_weight(x: &[f64], corner: usize, skip: Option<usize>) -> f64 {
        let d = x.len();
        let mut w = 1.0;
        for (i, &xi) in x.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let bit = (corner >> (d - 1 - i)) & 1;
            w *= if bit == 1 { xi } else { 1.0 - xi };
        }
        w
    }
}

impl Target for BinaryTableTarget {
    fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    fn energy_at(&self, x: &[f64]) -> f64 {
        self.table
            .iter()
            .enumerate()
            .map(|(k, u)| u * Self::corner_weight(x, k, None))
            .sum()
    }

    fn grad_at(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        (0..d)
            .map(|i| {
                let mask = 1 << (d - 1 - i);
                self.table
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| k & mask != 0)
                    .map(|(k, u)| (u - self.table[k ^ mask]) * Self::corner_weight(x, k, Some(i)))
                    .sum()
            })
            .collect()
    }
}
