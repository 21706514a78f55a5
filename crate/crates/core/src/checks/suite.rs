//! Named regression checks over the Monte-Carlo estimators, each compared
//! against its frozen oracle bound or a paired-seed decay trend. The CLI
//! `lemmas` command and the acceptance tests both run this list.

use serde::{Deserialize, Serialize};

use crate::checks::layer::{
    concentration_tail, linear_comb_var_conditioned, linear_model_tail, pairwise_cov_conditioned,
    variance_conditioned,
};
use crate::checks::moments::{
    mc_cross_correlation, mc_hermite_weighted, mc_relu_gain, CrossCorrParams, GainParams,
    HermiteKernelParams,
};
use crate::checks::thresholds as bounds;
use crate::error::Result;
use crate::model::{sample_hidden, DropoutSpec, HiddenSpec, LayerGenSpec};
use crate::rng::{derive_seed, RngSeed};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    /// Acceptance criterion this row belongs to (2 for the gain identity,
    /// 6 for the regression suite).
    pub criterion: u8,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn upper(name: &str, criterion: u8, value: f64, bound: f64, detail: String) -> Self {
        CheckOutcome {
            name: name.to_string(),
            criterion,
            value,
            bound,
            passed: value <= bound,
            detail,
        }
    }
}

/// Fixture seed for the whole suite; every check derives its own stream.
pub fn suite_seed() -> RngSeed {
    RngSeed::new(bounds::ORACLE_MASTER_SEED)
}

/// The rectified-gain identity E[w r(w h + xi)] = h/2 at the three
/// committed (h, sigma) points, one million samples each, tolerance 0.03
/// from the variance bound 3 h^2 + sigma^2.
pub fn run_gain_checks(seed: RngSeed) -> Vec<CheckOutcome> {
    let configs = [(0.0f64, 10.0f64), (1.0, 10.0), (2.0, 20.0)];
    configs
        .iter()
        .enumerate()
        .map(|(i, &(h, sigma))| {
            let p = GainParams { h, sigma };
            let e = mc_relu_gain(&p, 1_000_000, derive_seed(seed, 10 + i as u64));
            let dev = (e.mean - h / 2.0).abs();
            CheckOutcome::upper(
                &format!("relu-gain mean (h={h}, sigma={sigma})"),
                2,
                dev,
                0.03,
                format!("estimate {:.5}, target {:.1}, se {:.5}", e.mean, h / 2.0, e.std_error),
            )
        })
        .collect()
}

fn layer_fixture(m: usize, n: usize, k: usize, t: usize, seed: RngSeed) -> (LayerGenSpec, Vec<f64>) {
    let gen = LayerGenSpec::with_default_alpha(n, m, DropoutSpec::FixedSubset { t });
    let h = sample_hidden(&HiddenSpec::binary(m, k), seed)
        .expect("fixture spec is valid")
        .into_vec();
    (gen, h)
}

fn support_of(h: &[f64]) -> Vec<usize> {
    h.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// The full regression suite: absolute bounds from committed oracle runs
/// plus paired-seed decay trends in sigma, t, and n.
pub fn run_regression_suite(seed: RngSeed) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    // Cross-correlation gap: bounded by a constant, here at a = b = 1.
    let cc = CrossCorrParams { a: 1.0, b: 1.0, sigma: 10.0 };
    let est = mc_cross_correlation(&cc, 1_000_000, derive_seed(seed, 20));
    out.push(CheckOutcome::upper(
        "cross-correlation gap (a=b=1, sigma=10)",
        6,
        est.gap,
        bounds::CROSS_CORRELATION_GAP_MAX,
        format!("joint {:.4}, product {:.4}", est.joint.mean, est.product.mean),
    ));

    // Hermite-weighted kernel: absolute bound plus 1/sigma decay trend.
    let hk = |sigma: f64| HermiteKernelParams { scale: 2.0, sigma };
    let h100 = mc_hermite_weighted(&hk(100.0), 100_000, derive_seed(seed, 21));
    out.push(CheckOutcome::upper(
        "hermite-weighted |mean| (scale=2, sigma=100)",
        6,
        h100.absolute.mean,
        bounds::HERMITE_ABS_MAX,
        format!("signed {:.5}, se {:.5}", h100.signed.mean, h100.absolute.std_error),
    ));
    let h10 = mc_hermite_weighted(&hk(10.0), 100_000, derive_seed(seed, 22));
    let h1000 = mc_hermite_weighted(&hk(1000.0), 100_000, derive_seed(seed, 23));
    let trend_ok = h100.absolute.mean
        <= h10.absolute.mean + 3.0 * h100.absolute.combined_std_error(&h10.absolute)
        && h1000.absolute.mean
            <= h100.absolute.mean + 3.0 * h1000.absolute.combined_std_error(&h100.absolute);
    out.push(CheckOutcome {
        name: "hermite-weighted decay in sigma (10 -> 100 -> 1000)".into(),
        criterion: 6,
        value: h1000.absolute.mean,
        bound: h10.absolute.mean,
        passed: trend_ok,
        detail: format!(
            "|mean| {:.4} -> {:.4} -> {:.4}",
            h10.absolute.mean, h100.absolute.mean, h1000.absolute.mean
        ),
    });

    // Pairwise covariance: absolute bound at (k=20, t=200) and 1/t decay.
    let (gen_a, h_a) = layer_fixture(64, 512, 20, 200, derive_seed(seed, 24));
    let supp = support_of(&h_a);
    let cov = pairwise_cov_conditioned(&gen_a, &h_a, supp[0], supp[1], 100_000, derive_seed(seed, 25))?;
    out.push(CheckOutcome::upper(
        "pairwise covariance (k=20, t=200)",
        6,
        cov.mean.abs(),
        bounds::PAIRWISE_COV_MAX,
        format!("cov {:.5}, se {:.5}", cov.mean, cov.std_error),
    ));
    let gen_t100 = LayerGenSpec::with_default_alpha(512, 64, DropoutSpec::FixedSubset { t: 100 });
    let gen_t400 = LayerGenSpec::with_default_alpha(512, 64, DropoutSpec::FixedSubset { t: 400 });
    let cov100 = pairwise_cov_conditioned(&gen_t100, &h_a, supp[0], supp[1], 40_000, derive_seed(seed, 26))?;
    let cov400 = pairwise_cov_conditioned(&gen_t400, &h_a, supp[0], supp[1], 40_000, derive_seed(seed, 26))?;
    let slack = 3.0 * cov100.combined_std_error(&cov400);
    out.push(CheckOutcome {
        name: "pairwise covariance decay (t: 100 -> 400)".into(),
        criterion: 6,
        value: cov400.mean.abs(),
        bound: cov100.mean.abs() + slack,
        passed: cov400.mean.abs() <= cov100.mean.abs() + slack,
        detail: format!("|cov| {:.5} -> {:.5}", cov100.mean.abs(), cov400.mean.abs()),
    });

    // Support quadratic form: bound at (k=16, t=256) and k^2/t decay.
    let (gen_b, h_b) = layer_fixture(64, 2048, 16, 256, derive_seed(seed, 27));
    let ones: Vec<f64> = h_b.iter().map(|&v| if v != 0.0 { 1.0 } else { 0.0 }).collect();
    let lc256 = linear_comb_var_conditioned(&gen_b, &h_b, &ones, 40_000, derive_seed(seed, 28))?;
    out.push(CheckOutcome::upper(
        "support form variance (k=16, t=256)",
        6,
        lc256.mean,
        bounds::LINEAR_COMB_VAR_MAX,
        format!("se {:.4}", lc256.std_error),
    ));
    let gen_b4 = LayerGenSpec::with_default_alpha(2048, 64, DropoutSpec::FixedSubset { t: 1024 });
    let lc1024 = linear_comb_var_conditioned(&gen_b4, &h_b, &ones, 40_000, derive_seed(seed, 28))?;
    let slack = 3.0 * lc256.combined_std_error(&lc1024);
    out.push(CheckOutcome {
        name: "support form decay (t: 256 -> 1024)".into(),
        criterion: 6,
        value: lc1024.mean,
        bound: lc256.mean + slack,
        passed: lc1024.mean <= lc256.mean + slack,
        detail: format!("{:.4} -> {:.4}", lc256.mean, lc1024.mean),
    });

    // Coordinate variance: Var <= C k/t, and halving when t doubles.
    let (gen_c, h_c) = layer_fixture(64, 1024, 16, 256, derive_seed(seed, 29));
    let coord = support_of(&h_c)[0];
    let v256 = variance_conditioned(&gen_c, &h_c, coord, 40_000, derive_seed(seed, 30))?;
    out.push(CheckOutcome::upper(
        "coordinate variance (k=16, t=256)",
        6,
        v256.mean,
        bounds::VARIANCE_RATIO_C * 16.0 / 256.0,
        format!("se {:.5}", v256.std_error),
    ));
    let gen_c2 = LayerGenSpec::with_default_alpha(1024, 64, DropoutSpec::FixedSubset { t: 512 });
    let v512 = variance_conditioned(&gen_c2, &h_c, coord, 40_000, derive_seed(seed, 30))?;
    let halved_dev = (v512.mean - v256.mean / 2.0).abs();
    let slack = 3.0 * (v512.std_error + v256.std_error / 2.0);
    out.push(CheckOutcome {
        name: "coordinate variance halves (t: 256 -> 512)".into(),
        criterion: 6,
        value: halved_dev,
        bound: slack,
        passed: halved_dev <= slack,
        detail: format!("{:.5} -> {:.5}", v256.mean, v512.mean),
    });

    // Concentration tail at (k=16, t=256, n=2048) plus the quartered-t shift.
    let (gen_d, h_d) = layer_fixture(64, 2048, 16, 256, derive_seed(seed, 31));
    let tail_threshold =
        bounds::CONCENTRATION_TAIL_C * (16.0f64 / 256.0).sqrt() * (2048.0f64).ln();
    let tail256 = concentration_tail(&gen_d, &h_d, 400, tail_threshold, derive_seed(seed, 32))?;
    out.push(CheckOutcome::upper(
        "concentration p99 (k=16, t=256, n=2048)",
        6,
        tail256.p99,
        bounds::CONCENTRATION_P99_MAX,
        format!("p50 {:.4}, p90 {:.4}", tail256.p50, tail256.p90),
    ));
    out.push(CheckOutcome::upper(
        "concentration tail fraction over threshold",
        6,
        tail256.frac_exceeding,
        bounds::CONCENTRATION_FRAC_MAX,
        format!("threshold {:.4}", tail256.threshold),
    ));
    let gen_d4 = LayerGenSpec::with_default_alpha(2048, 64, DropoutSpec::FixedSubset { t: 1024 });
    let tail1024 = concentration_tail(&gen_d4, &h_d, 400, tail_threshold, derive_seed(seed, 32))?;
    out.push(CheckOutcome {
        name: "concentration quantiles shift down (t: 256 -> 1024)".into(),
        criterion: 6,
        value: tail1024.p90,
        bound: tail256.p90,
        passed: tail1024.p50 < tail256.p50 && tail1024.p90 < tail256.p90,
        detail: format!("p90 {:.4} -> {:.4}", tail256.p90, tail1024.p90),
    });

    // Linear model: median bound at (n=4096, m=64) and the 2x shrink when
    // n quadruples, 20% slack.
    let lin_threshold = (64.0f64 / 4096.0).sqrt() * (64.0f64).ln().sqrt();
    let lin4096 = linear_model_tail(4096, 64, 400, lin_threshold, derive_seed(seed, 33))?;
    out.push(CheckOutcome::upper(
        "linear model median max-error (n=4096, m=64)",
        6,
        lin4096.p50,
        bounds::LINEAR_MODEL_MEDIAN_MAX,
        format!("p90 {:.4}", lin4096.p90),
    ));
    let lin1024 = linear_model_tail(1024, 64, 400, lin_threshold, derive_seed(seed, 33))?;
    let ratio = lin1024.p50 / lin4096.p50;
    out.push(CheckOutcome {
        name: "linear model median shrinks ~2x (n: 1024 -> 4096)".into(),
        criterion: 6,
        value: ratio,
        bound: 2.0 * 1.25,
        passed: ratio >= 2.0 * 0.8 && ratio <= 2.0 * 1.25,
        detail: format!("medians {:.4} -> {:.4}", lin1024.p50, lin4096.p50),
    });

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::experiments::{two_layer_experiment, TwoLayerConfig};
    use crate::checks::layer::linear_model_tail;
    use crate::checks::moments::{
        mc_cross_correlation, mc_hermite_weighted, mc_relu_gain, mc_relu_gain_second_moment,
    };
    use crate::checks::thresholds as bounds;

    /// Reprints suggested bounds from high-sample oracle runs. Run with
    /// `cargo test -p shadownet-core --release -- --ignored recalibrate --nocapture`.
    #[test]
    #[ignore]
    fn recalibrate_thresholds() {
        let seed = suite_seed();

        let cc = CrossCorrParams { a: 1.0, b: 1.0, sigma: 10.0 };
        let est = mc_cross_correlation(&cc, 10_000_000, derive_seed(seed, 1000));
        let comb = est.joint.combined_std_error(&est.product);
        println!(
            "CROSS_CORRELATION_GAP_MAX: gap {:.5} se {:.5} -> {:.4}",
            est.gap,
            comb,
            (est.gap + 5.0 * comb) * 1.05
        );

        let hm = mc_hermite_weighted(
            &HermiteKernelParams { scale: 2.0, sigma: 100.0 },
            1_000_000,
            derive_seed(seed, 1001),
        );
        println!(
            "HERMITE_ABS_MAX: mean {:.6} se {:.6} -> {:.5}",
            hm.absolute.mean,
            hm.absolute.std_error,
            hm.absolute.mean * 1.10 + 5.0 * hm.absolute.std_error
        );

        let (gen_a, h_a) = layer_fixture(64, 512, 20, 200, derive_seed(seed, 24));
        let supp = support_of(&h_a);
        let cov =
            pairwise_cov_conditioned(&gen_a, &h_a, supp[0], supp[1], 100_000, derive_seed(seed, 1002))
                .unwrap();
        println!(
            "PAIRWISE_COV_MAX: cov {:.6} se {:.6} -> {:.4}",
            cov.mean,
            cov.std_error,
            cov.mean.abs() + 5.0 * cov.std_error
        );

        let (gen_b, h_b) = layer_fixture(64, 2048, 16, 256, derive_seed(seed, 27));
        let ones: Vec<f64> = h_b.iter().map(|&v| if v != 0.0 { 1.0 } else { 0.0 }).collect();
        let lc = linear_comb_var_conditioned(&gen_b, &h_b, &ones, 100_000, derive_seed(seed, 1003))
            .unwrap();
        println!(
            "LINEAR_COMB_VAR_MAX: {:.5} se {:.5} -> {:.4}",
            lc.mean,
            lc.std_error,
            (lc.mean + 5.0 * lc.std_error) * 1.10
        );

        let mut worst: f64 = 0.0;
        for (ki, &k) in [8usize, 16, 32].iter().enumerate() {
            for (ti, &t) in [128usize, 256, 512].iter().enumerate() {
                let (g, h) = layer_fixture(64, 1024, k, t, derive_seed(seed, 40 + ki as u64));
                let coord = support_of(&h)[0];
                let v = variance_conditioned(&g, &h, coord, 40_000, derive_seed(seed, 50 + (ki * 3 + ti) as u64))
                    .unwrap();
                let ratio = v.mean * t as f64 / k as f64;
                worst = worst.max(ratio);
            }
        }
        println!("VARIANCE_RATIO_C: worst ratio {:.4} -> {:.4}", worst, worst * 1.5);

        let (gen_d, h_d) = layer_fixture(64, 2048, 16, 256, derive_seed(seed, 31));
        let tail = concentration_tail(&gen_d, &h_d, 2000, 1.0, derive_seed(seed, 1004)).unwrap();
        println!(
            "CONCENTRATION_P99_MAX: p99 {:.5} -> {:.4}; p50 {:.4} p90 {:.4}",
            tail.p99,
            tail.p99 * 1.10,
            tail.p50,
            tail.p90
        );
        println!(
            "CONCENTRATION_TAIL_C: p99/(sqrt(k/t) ln n) = {:.4}",
            tail.p99 / ((16.0f64 / 256.0).sqrt() * (2048.0f64).ln())
        );

        let lin = linear_model_tail(4096, 64, 2000, 1.0, derive_seed(seed, 1005)).unwrap();
        println!(
            "LINEAR_MODEL_MEDIAN_MAX: median {:.5} -> {:.4}",
            lin.p50,
            lin.p50 * 1.10
        );

        let cfg = TwoLayerConfig { q: 5, k: 100, t: 400, p: 64, m: 512, n: 2048 };
        let tl = two_layer_experiment(&cfg, 2000, derive_seed(seed, 1006)).unwrap();
        println!(
            "TWO_LAYER_ERR_MAX: mean {:.5} se {:.5} -> {:.4}",
            tl.mean,
            tl.std_error,
            (tl.mean + 5.0 * tl.std_error) * 1.10
        );

        let p = GainParams { h: 2.0, sigma: 20.0 };
        let g = mc_relu_gain(&p, 1_000_000, derive_seed(seed, 1007));
        println!("gain (2, 20): {:.5} se {:.5}", g.mean, g.std_error);
        let sm = mc_relu_gain_second_moment(&p, 1_000_000, derive_seed(seed, 1008));
        println!("second moment (2, 20): {:.3} (bound {})", sm.mean, 3.0 * 4.0 + 400.0);
    }

    #[test]
    fn gain_checks_pass_their_bounds() {
        for row in run_gain_checks(suite_seed()) {
            assert!(row.passed, "{}: {} > {}", row.name, row.value, row.bound);
        }
    }

    #[test]
    fn suite_names_are_unique() {
        let rows = run_gain_checks(suite_seed());
        let mut names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), rows.len());
        let _ = bounds::ORACLE_MASTER_SEED;
    }
}
