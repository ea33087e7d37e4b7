//! Coordinatewise-factorized discrete domains and points in them.
//!
//! Every coordinate takes integer values `0..=max`. Binary coordinates are the
//! special case `max = 1`. Values are embedded in the reals as the integers
//! they name, so squared distances and gradients act on that embedding.

use serde::{Deserialize, Serialize};

use crate::error::{AcsError, Result};

/// Default number of states above which enumeration refuses to run.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoordDomain {
    Binary,
    /// Values `0..=max`.
    Ordinal { max: u32 },
}

impl CoordDomain {
    pub fn max_value(&self) -> u32 {
        match *self {
            CoordDomain::Binary => 1,
            CoordDomain::Ordinal { max } => max,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.max_value() as usize + 1
    }

    pub fn contains(&self, v: u32) -> bool {
        v <= self.max_value()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpace {
    domains: Vec<CoordDomain>,
}

impl DiscreteSpace {
    pub fn new(domains: Vec<CoordDomain>) -> Result<Self> {
        if domains.is_empty() {
            return Err(AcsError::InvalidSpace("space needs at least one coordinate".into()));
        }
        if let Some(i) = domains.iter().position(|d| d.max_value() < 1) {
            return Err(AcsError::InvalidSpace(format!(
                "coordinate {i} has fewer than two values"
            )));
        }
        Ok(Self { domains })
    }

    pub fn binary(dims: usize) -> Result<Self> {
        Self::new(vec![CoordDomain::Binary; dims])
    }

    pub fn ordinal(dims: usize, max: u32) -> Result<Self> {
        Self::new(vec![CoordDomain::Ordinal { max }; dims])
    }

    pub fn dims(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[CoordDomain] {
        &self.domains
    }

    pub fn domain(&self, i: usize) -> CoordDomain {
        self.domains[i]
    }

    pub fn is_binary(&self) -> bool {
        self.domains.iter().all(|d| d.max_value() == 1)
    }

    /// |Θ|, or `None` when it does not fit in a u128.
    pub fn num_states(&self) -> Option<u128> {
        self.domains
            .iter()
            .try_fold(1u128, |acc, d| acc.checked_mul(d.cardinality() as u128))
    }

    /// Fails with [`AcsError::EnumerationCapExceeded`] when |Θ| > `cap`.
    pub fn check_enumerable(&self, cap: u128) -> Result<usize> {
        match self.num_states() {
            Some(n) if n <= cap => Ok(n as usize),
            Some(n) => Err(AcsError::EnumerationCapExceeded { states: n, cap }),
            None => Err(AcsError::EnumerationCapExceeded { states: u128::MAX, cap }),
        }
    }

    pub fn validate(&self, state: &State) -> Result<()> {
        if state.len() != self.dims() {
            return Err(AcsError::DimensionMismatch {
                expected: self.dims(),
                got: state.len(),
            });
        }
        for (coord, (&v, d)) in state.values().iter().zip(&self.domains).enumerate() {
            if !d.contains(v) {
                return Err(AcsError::OutOfDomain { coord, value: v });
            }
        }
        Ok(())
    }

    /// Position of `state` in the order produced by [`enumerate_states`].
    pub fn index_of(&self, state: &State) -> usize {
        state
            .values()
            .iter()
            .zip(&self.domains)
            .fold(0usize, |acc, (&v, d)| acc * d.cardinality() + v as usize)
    }

    /// Inverse of [`DiscreteSpace::index_of`].
    pub fn state_at(&self, mut index: usize) -> State {
        let mut values = vec![0u32; self.dims()];
        for (slot, d) in values.iter_mut().zip(&self.domains).rev() {
            let c = d.cardinality();
            *slot = (index % c) as u32;
            index /= c;
        }
        State::new(values)
    }

    /// The all-zero state.
    pub fn origin(&self) -> State {
        State::new(vec![0; self.dims()])
    }
}

/// A point of a [`DiscreteSpace`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State(Vec<u32>);

impl State {
    pub fn new(values: Vec<u32>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [u32] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// Real embedding used for energy and gradient evaluation.
    pub fn to_real(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64).collect()
    }

    pub fn hamming(&self, other: &State) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl From<Vec<u32>> for State {
    fn from(values: Vec<u32>) -> Self {
        Self(values)
    }
}

/// Squared Euclidean distance between the integer embeddings of `a` and `b`.
pub fn distance_sq(a: &State, b: &State) -> Result<f64> {
    if a.len() != b.len() {
        return Err(AcsError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum())
}

/// All states of `space` in lexicographic order, coordinate 0 varying slowest.
pub fn enumerate_states(space: &DiscreteSpace, cap: u128) -> Result<Vec<State>> {
    let n = space.check_enumerable(cap)?;
    Ok((0..n).map(|i| space.state_at(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn st(v: &[u32]) -> State {
        State::new(v.to_vec())
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_sq(&st(&[1, 2]), &st(&[1, 2])).unwrap(), 0.0);
        assert_eq!(distance_sq(&st(&[0, 0, 0]), &st(&[1, 0, 1])).unwrap(), 2.0);
        assert_eq!(distance_sq(&st(&[0, 0]), &st(&[3, 4])).unwrap(), 25.0);
        assert!(matches!(
            distance_sq(&st(&[0]), &st(&[0, 1])),
            Err(AcsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn enumeration_order() {
        let s = DiscreteSpace::binary(2).unwrap();
        let all = enumerate_states(&s, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(all, vec![st(&[0, 0]), st(&[0, 1]), st(&[1, 0]), st(&[1, 1])]);

        let s = DiscreteSpace::ordinal(1, 2).unwrap();
        let all = enumerate_states(&s, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(all, vec![st(&[0]), st(&[1]), st(&[2])]);

        let s = DiscreteSpace::binary(10).unwrap();
        let all = enumerate_states(&s, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(all.len(), 1024);
        let uniq: HashSet<_> = all.iter().cloned().collect();
        assert_eq!(uniq.len(), 1024);
        for (i, x) in all.iter().enumerate() {
            assert_eq!(s.index_of(x), i);
        }
    }

    #[test]
    fn enumeration_cap() {
        let s = DiscreteSpace::binary(21).unwrap();
        assert!(matches!(
            enumerate_states(&s, DEFAULT_ENUMERATION_CAP),
            Err(AcsError::EnumerationCapExceeded { .. })
        ));
        let huge = DiscreteSpace::binary(200).unwrap();
        assert_eq!(huge.num_states(), None);
        assert!(huge.check_enumerable(DEFAULT_ENUMERATION_CAP).is_err());
    }

    #[test]
    fn invalid_spaces() {
        assert!(DiscreteSpace::new(vec![]).is_err());
        assert!(DiscreteSpace::ordinal(2, 0).is_err());
        let s = DiscreteSpace::ordinal(2, 3).unwrap();
        assert!(s.validate(&st(&[3, 3])).is_ok());
        assert!(matches!(
            s.validate(&st(&[4, 0])),
            Err(AcsError::OutOfDomain { coord: 0, value: 4 })
        ));
    }

    #[test]
    fn mixed_radix_index() {
        let s = DiscreteSpace::new(vec![
            CoordDomain::Ordinal { max: 2 },
            CoordDomain::Binary,
            CoordDomain::Ordinal { max: 3 },
        ])
        .unwrap();
        let all = enumerate_states(&s, 1000).unwrap();
        assert_eq!(all.len(), 24);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }
}
