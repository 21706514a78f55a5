//! Statistical verification: Monte-Carlo estimators for the moment
//! identities behind layer inversion, concentration tails, decay-law
//! experiments, and a regression suite against frozen oracle bounds.

pub mod experiments;
pub mod layer;
pub mod moments;
pub mod suite;
pub mod thresholds;

pub use experiments::{
    paired_dropout_experiment, scaling_experiment, support_recovery_experiment,
    two_layer_experiment, DropoutComparison, ScalingPoint, ScalingResult, SupportRecovery,
    TwoLayerConfig,
};
pub use layer::{
    concentration_tail, linear_comb_var_conditioned, linear_model_tail, pairwise_cov_conditioned,
    variance_conditioned, TailReport,
};
pub use moments::{
    kernel_integral, hermite_weighted, mc_cross_correlation, mc_hermite_weighted, mc_relu_gain,
    mc_relu_gain_second_moment, CrossCorrEstimate, CrossCorrParams, GainParams, HermiteKernelParams,
    HermiteMoments,
};
pub use suite::{run_gain_checks, run_regression_suite, suite_seed, CheckOutcome};
