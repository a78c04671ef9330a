//! Ensemble statistics and the estimate checks run on top of the solver.

pub mod ensemble;
pub mod entropy;
pub mod experiments;

pub use ensemble::{fit_slope, mean_and_half_width, par_map, trapezoid, EnsembleStats, Z95};
pub use entropy::{entropy_residual, EntropyPair, EntropyResidual, TestFunction};

pub use experiments::{
    contraction_experiment, frac_regularity_check, initial_time_continuity, moment_check, moment_experiment,
    moment_spread, path_for, phi_stability_experiment, r_lambda, r_lambda_pair, run_seeds, snapshot_times,
    ContractionReport, Excluded, FracRegularityReport, InitialContinuityReport, MomentReport, MomentSample,
    PhiStabilityReport, StabilitySetup, MAX_EXCLUDED, entropy_study, EntropyLevel, EntropyStudyReport, EntropyStudySetup,
};
