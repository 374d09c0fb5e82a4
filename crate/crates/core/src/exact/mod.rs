//! Exhaustive computations on finite-order kernels.

pub mod coupling;
pub mod dbar;
pub mod ruelle;
pub mod stationary;

pub use coupling::{hulse_coupling, CoupledKernel, JointKernel, JointStationary};
pub use dbar::{exact_dbar_attractive, exact_dbar_specs, DbarExact};
pub use ruelle::{most_recent_plus, ruelle_apply, ruelle_extremal};
pub use stationary::{
    entropy, marginal_plus, pair_marginals, stationary, stationary_with, SolveMethod, SolveOptions,
    StateDistribution,
};
