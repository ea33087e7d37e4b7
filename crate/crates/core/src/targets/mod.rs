//! Concrete target distributions.

mod quadratic;
pub(crate) mod rbm;
mod synthetic;
mod table;

pub use quadratic::QuadraticTarget;
pub use rbm::{sample_rbm_scaled, sample_rbm_synthetic, RbmModel};
pub use synthetic::{build_grid_modes, SyntheticMultimodal};
pub use table::BinaryTableTarget;
