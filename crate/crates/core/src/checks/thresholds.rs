//! Frozen regression bounds for the statistical suite.
//!
//! The decay laws verified here only pin constants up to logarithmic
//! factors, so every absolute bound below was fixed once by a high-sample
//! oracle run at the seed noted next to it, then widened by a safety
//! margin. `cargo test -p shadownet-core --release -- --ignored recalibrate
//! --nocapture` reprints suggested values.

/// Oracle seed used for every calibration run below.
pub const ORACLE_MASTER_SEED: u64 = 0x5EED_CA11;

/// Gap between E[uv r(au+bv+xi)^2] and E[u r]E[v r] at a = b = 1,
/// sigma = 10. Oracle: 1e7 samples gave gap 0.70107 (combined se 0.04106);
/// bound is gap plus five standard errors plus 5% headroom.
pub const CROSS_CORRELATION_GAP_MAX: f64 = 0.9517;

/// E[|hermite_weighted|] at scale = 2, sigma = 100.
/// Oracle: 1e6 samples gave 0.052154 (se 0.000291); bound adds five
/// standard errors and 10% headroom.
pub const HERMITE_ABS_MAX: f64 = 0.05882;

/// |cov| of two support coordinates at k = 20, t = 200, m = 64, n = 512.
/// Oracle: 1e5 draws gave cov 0.015033 (se 0.000684); bound is |cov| plus
/// five standard errors.
pub const PAIRWISE_COV_MAX: f64 = 0.0185;

/// Support quadratic form (all-ones u) at k = 16, t = 256, m = 64,
/// n = 2048. Oracle: 1e5 draws gave 5.00492 (se 0.02283); bound adds five
/// standard errors and 10% headroom.
pub const LINEAR_COMB_VAR_MAX: f64 = 5.6310;

/// Coordinate variance bound constant: Var <= C k / t. Oracle sweep over
/// (k, t) in {8,16,32} x {128,256,512} at m = 64, n = 1024 peaked at ratio
/// 2.3938; C is that times 1.5.
pub const VARIANCE_RATIO_C: f64 = 3.5907;

/// 99th percentile of max_i |est_i - h_i| at k = 16, t = 256, n = 2048,
/// m = 64. Oracle: 2000 trials gave p99 = 1.38459; bound widened 10%.
pub const CONCENTRATION_P99_MAX: f64 = 1.5230;

/// Constant c in the tail threshold c sqrt(k/t) ln n for the concentration
/// fixture. The oracle p99 sat at ratio 0.7264; c is set just above it so
/// roughly one trial in a hundred crosses the line.
pub const CONCENTRATION_TAIL_C: f64 = 0.75;

/// Fraction of fixture trials allowed above the tail threshold.
pub const CONCENTRATION_FRAC_MAX: f64 = 0.03;

/// Median max-norm error of the linear model at n = 4096, m = 64.
/// Oracle: 2000 trials gave median 0.22649; bound widened 10%.
pub const LINEAR_MODEL_MEDIAN_MAX: f64 = 0.2491;

/// Two-layer per-coordinate squared error at q = 5, k = 100, t = 400
/// (p = 64, m = 512, n = 2048). Oracle: 2000 trials gave mean 0.28643
/// (se 0.00865); bound is the mean plus five standard errors plus 10%.
pub const TWO_LAYER_ERR_MAX: f64 = 0.3627;
