//! Log-space arithmetic and the criterium checks built on it.

pub mod corollaries;
pub mod criterium;
pub mod lemmas;
pub mod logspace;
