//! Monte-Carlo estimation with distribution-free confidence bands.

pub mod estimators;
pub mod harness;

pub use estimators::{
    concentration_empirical, d2_majorant, estimate_dbar_upper, estimate_eta_theta, estimate_marginal,
    estimate_marginals, exact_probe_gap, phase_probe, phase_probe_spec, ConcentrationEstimate, EtaThetaEstimate,
    MajorantEstimate, MarginalEstimate, PhaseProbe,
};
pub use harness::{
    chebyshev_halfwidth, hoeffding_halfwidth, run_indexed, Band, BandMethod, EstimateReport, RunOptions,
    DEFAULT_LEVEL,
};
