//! Layer-level estimators conditioned on a fixed hidden vector: coordinate
//! variances and covariances of the transpose-map estimate, quadratic forms
//! over the support, concentration tails, and the linear-model baseline.
//!
//! Each draw refreshes the weights and the dropout mask while the hidden
//! vector stays fixed. The estimators sample only the weight columns they
//! actually touch, which keeps a draw at O(n * (k + coords)) instead of
//! O(n * m); the distribution is unchanged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matvec_t, Matrix};
use crate::model::{generate_layer, LayerGenSpec};
use crate::rng::{bernoulli_mask, derive_seed, gaussian_matrix, Rng, RngSeed};
use crate::stats::{quantile, McEstimate};

/// Draws the requested weight columns (sorted, unique indices) as columns of
/// height `n`, in index order from a single stream.
fn draw_columns(n: usize, cols: &[usize], seed: RngSeed) -> Vec<Vec<f64>> {
    let mut rng = Rng::new(seed);
    cols.iter()
        .map(|_| (0..n).map(|_| rng.normal()).collect())
        .collect()
}

fn sorted_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut all: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// One (weights, mask) draw of the transpose-map estimate at `coords`,
/// conditioned on h. Column draws cover support(h) plus `coords`.
fn estimate_coords(gen: &LayerGenSpec, h: &[f64], coords: &[usize], seed: RngSeed) -> Vec<f64> {
    let support: Vec<usize> = h
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, _)| i)
        .collect();
    let needed = sorted_union(&support, coords);
    let columns = draw_columns(gen.out_dim, &needed, derive_seed(seed, 0));
    let col_of = |idx: usize| {
        let pos = needed.binary_search(&idx).expect("column was drawn");
        &columns[pos]
    };
    let mask = gen
        .dropout
        .draw_mask(gen.out_dim, derive_seed(seed, 1))
        .expect("mask parameters validated by caller");
    // x = mask .* r(alpha * W h), using only support columns.
    let mut x = vec![0.0; gen.out_dim];
    for &c in &support {
        let col = col_of(c);
        let hc = h[c];
        for (xj, &wjc) in x.iter_mut().zip(col) {
            *xj += wjc * hc;
        }
    }
    for (xj, &mj) in x.iter_mut().zip(&mask) {
        *xj = (gen.alpha * *xj).max(0.0) * mj;
    }
    coords
        .iter()
        .map(|&c| col_of(c).iter().zip(&x).map(|(w, xv)| w * xv).sum())
        .collect()
}

fn validate_coord(gen: &LayerGenSpec, h: &[f64], coord: usize) -> Result<()> {
    if h.len() != gen.in_dim {
        return Err(Error::dim(
            format!("hidden of length {}", gen.in_dim),
            format!("{}", h.len()),
        ));
    }
    if coord >= gen.in_dim {
        return Err(Error::invalid(format!(
            "coordinate {coord} outside dimension {}",
            gen.in_dim
        )));
    }
    Ok(())
}

fn sample_pairs(
    gen: &LayerGenSpec,
    h: &[f64],
    coords: &[usize],
    n_samples: usize,
    seed: RngSeed,
) -> Vec<Vec<f64>> {
    (0..n_samples)
        .into_par_iter()
        .map(|s| estimate_coords(gen, h, coords, derive_seed(seed, s as u64)))
        .collect()
}

/// Covariance of the transpose-map estimate at two coordinates over fresh
/// (weights, mask) draws, holding h fixed. Decays like 1/t.
pub fn pairwise_cov_conditioned(
    gen: &LayerGenSpec,
    h: &[f64],
    i: usize,
    j: usize,
    n_samples: usize,
    seed: RngSeed,
) -> Result<McEstimate> {
    if i == j {
        return Err(Error::invalid("pairwise covariance needs distinct coordinates"));
    }
    validate_coord(gen, h, i)?;
    validate_coord(gen, h, j)?;
    assert!(n_samples >= 10_000, "covariance estimates need at least 1e4 draws");
    let samples = sample_pairs(gen, h, &[i, j], n_samples, seed);
    let n = n_samples as f64;
    let mean_a = samples.iter().map(|p| p[0]).sum::<f64>() / n;
    let mean_b = samples.iter().map(|p| p[1]).sum::<f64>() / n;
    let centered: Vec<f64> = samples
        .iter()
        .map(|p| (p[0] - mean_a) * (p[1] - mean_b))
        .collect();
    let cov = centered.iter().sum::<f64>() / (n - 1.0);
    let var_of_products = centered
        .iter()
        .map(|d| (d - cov) * (d - cov))
        .sum::<f64>()
        / (n - 1.0);
    Ok(McEstimate {
        mean: cov,
        std_error: (var_of_products / n).sqrt(),
        n_samples,
    })
}

/// Variance of one coordinate of the transpose-map estimate, h fixed.
/// The standard error uses the fourth central moment.
pub fn variance_conditioned(
    gen: &LayerGenSpec,
    h: &[f64],
    coord: usize,
    n_samples: usize,
    seed: RngSeed,
) -> Result<McEstimate> {
    validate_coord(gen, h, coord)?;
    assert!(n_samples >= 10_000);
    let samples = sample_pairs(gen, h, &[coord], n_samples, seed);
    let values: Vec<f64> = samples.iter().map(|p| p[0]).collect();
    Ok(variance_with_error(&values))
}

fn variance_with_error(values: &[f64]) -> McEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let m4 = values
        .iter()
        .map(|v| {
            let d = v - mean;
            d * d * d * d
        })
        .sum::<f64>()
        / n;
    McEstimate {
        mean: var,
        std_error: ((m4 - var * var).max(0.0) / n).sqrt(),
        n_samples: values.len(),
    }
}

/// E[|u^T (est_K - E est_K)|^2] for a weight vector u supported on the
/// support of h; equivalently the variance of the scalar u^T est.
pub fn linear_comb_var_conditioned(
    gen: &LayerGenSpec,
    h: &[f64],
    u: &[f64],
    n_samples: usize,
    seed: RngSeed,
) -> Result<McEstimate> {
    if u.len() != h.len() {
        return Err(Error::dim(
            format!("u of length {}", h.len()),
            format!("{}", u.len()),
        ));
    }
    if u.iter().zip(h).any(|(&ui, &hi)| ui != 0.0 && hi == 0.0) {
        return Err(Error::invalid(
            "u must be supported on the support of the hidden vector",
        ));
    }
    validate_coord(gen, h, 0)?;
    assert!(n_samples >= 10_000);
    let support: Vec<usize> = h
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, _)| i)
        .collect();
    if support.is_empty() {
        return Ok(McEstimate {
            mean: 0.0,
            std_error: 0.0,
            n_samples,
        });
    }
    let weights: Vec<f64> = support.iter().map(|&c| u[c]).collect();
    let samples = sample_pairs(gen, h, &support, n_samples, seed);
    let values: Vec<f64> = samples
        .iter()
        .map(|est| est.iter().zip(&weights).map(|(e, w)| e * w).sum())
        .collect();
    Ok(variance_with_error(&values))
}

/// Quantile summary of per-trial maximum deviations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailReport {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    /// Fraction of trials whose max deviation exceeded `threshold`.
    pub frac_exceeding: f64,
    pub threshold: f64,
    pub n_trials: usize,
}

fn tail_report(mut deviations: Vec<f64>, threshold: f64) -> TailReport {
    let n = deviations.len();
    let exceeding = deviations.iter().filter(|&&d| d > threshold).count();
    deviations.sort_by(|a, b| a.partial_cmp(b).unwrap());
    TailReport {
        p50: quantile(&deviations, 0.50),
        p90: quantile(&deviations, 0.90),
        p99: quantile(&deviations, 0.99),
        frac_exceeding: exceeding as f64 / n as f64,
        threshold,
        n_trials: n,
    }
}

/// Max deviation of one full generate-and-transpose round trip with an
/// explicit weight matrix (used directly by exact-inverse tests).
pub fn deviation_once(w: &Matrix, h: &[f64], gen: &LayerGenSpec, seed: RngSeed) -> Result<f64> {
    let x = generate_layer(w, h, gen, seed)?;
    let est = matvec_t(w, &x)?;
    Ok(est
        .iter()
        .zip(h)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Tail of max_i |est_i - h_i| over fresh (weights, mask) trials, h fixed.
pub fn concentration_tail(
    gen: &LayerGenSpec,
    h: &[f64],
    n_trials: usize,
    threshold: f64,
    seed: RngSeed,
) -> Result<TailReport> {
    validate_coord(gen, h, 0)?;
    assert!(n_trials >= 200, "tail quantiles need at least 200 trials");
    let deviations: Result<Vec<f64>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let trial = derive_seed(seed, i as u64);
            let w = gaussian_matrix(gen.out_dim, gen.in_dim, derive_seed(trial, 0));
            deviation_once(&w, h, gen, derive_seed(trial, 1))
        })
        .collect();
    Ok(tail_report(deviations?, threshold))
}

/// Linear baseline: h with fair-coin 0/1 coordinates, x = W h, estimate
/// (1/n) W^T x. Reports the tail of the max-norm error over trials.
pub fn linear_model_tail(
    n: usize,
    m: usize,
    n_trials: usize,
    threshold: f64,
    seed: RngSeed,
) -> Result<TailReport> {
    if n <= m {
        return Err(Error::invalid(format!(
            "linear model needs n > m, got n = {n}, m = {m}"
        )));
    }
    assert!(n_trials >= 100);
    let deviations: Vec<f64> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let trial = derive_seed(seed, i as u64);
            let w = gaussian_matrix(n, m, derive_seed(trial, 0));
            let h = bernoulli_mask(m, 0.5, derive_seed(trial, 1));
            linear_deviation(&w, &h)
        })
        .collect();
    Ok(tail_report(deviations, threshold))
}

/// Max-norm error of the scaled transpose estimate in the linear model.
pub fn linear_deviation(w: &Matrix, h: &[f64]) -> f64 {
    let x = crate::linalg::matvec(w, h).expect("shapes fixed by caller");
    let est = matvec_t(w, &x).expect("shapes fixed by caller");
    let n = w.rows() as f64;
    est.iter()
        .zip(h)
        .map(|(e, hv)| (e / n - hv).abs())
        .fold(0.0, f64::max)
}
