//! Coupling from the past driven by one shared stream of uniforms.

pub mod chain;
pub mod engine;
pub mod io;
pub mod rng;

pub use chain::{base_threshold, ChainState, Past, UpdateRule};
pub use engine::{
    coalesce_window, coalescence_time, coupled_perfect_sample, forward_simulate, perfect_sample,
    regeneration_time, regeneration_time_at, CftpMethod, CftpResult, DEFAULT_SCAN_CAP,
};
pub use rng::{purpose, RandomnessStream, StreamId};
