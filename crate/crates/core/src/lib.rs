//! Automatic cyclical sampling for multimodal discrete distributions.
//!
//! The crate provides coordinatewise-factorized discrete spaces, a family of
//! targets (synthetic grids, RBMs, quadratics), the parameterized
//! gradient-informed proposal with its cyclical schedule and automatic tuner,
//! baseline samplers, RBM learning, evaluation metrics, and exact-kernel
//! verification tools for small spaces.

pub mod error;
pub mod eval;
pub mod learning;
pub mod proposal;
pub mod rng;
pub mod samplers;
pub mod schedule;
pub mod space;
pub mod target;
pub mod targets;
pub mod theory;
pub mod tuner;

pub use error::{AcsError, Result};
pub use proposal::{ProposalOutcome, ProposalParams};
pub use rng::RngStream;
pub use schedule::{CosineConvention, Schedule};
pub use space::{distance_sq, enumerate_states, CoordDomain, DiscreteSpace, State, DEFAULT_ENUMERATION_CAP};
pub use target::Target;
