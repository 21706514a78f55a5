//! Scalar Monte-Carlo moments of rectified Gaussian forms.
//!
//! These estimators back the crate's statistical regression suite: the mean
//! gain of a signal passed through a rectified noisy channel, its second
//! moment, the gap between joint and product correlations, and the
//! Hermite-weighted kernel whose expectation decays like 1/sigma.

use serde::{Deserialize, Serialize};

use crate::quad::adaptive_simpson;
use crate::rng::{Rng, RngSeed};
use crate::stats::{McAccumulator, McEstimate};

/// Scalar channel: w ~ N(0,1), xi ~ N(0, sigma^2), response r(w h + xi).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GainParams {
    /// Signal coefficient, nonnegative.
    pub h: f64,
    /// Noise standard deviation.
    pub sigma: f64,
}

impl GainParams {
    /// The h/2 identity only holds for weak signal against wide noise.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.h > self.sigma.ln() {
            w.push(format!(
                "gain check: h = {} exceeds ln(sigma) = {:.3}",
                self.h,
                self.sigma.ln()
            ));
        }
        if self.sigma < 2.0 {
            w.push(format!("gain check: sigma = {} below 2", self.sigma));
        }
        w
    }
}

/// Estimates E[w * r(w h + xi)], which approaches h/2 for wide noise.
pub fn mc_relu_gain(p: &GainParams, n_samples: usize, seed: RngSeed) -> McEstimate {
    assert!(n_samples >= 10_000, "gain estimates need at least 1e4 samples");
    let mut rng = Rng::new(seed);
    let mut acc = McAccumulator::new();
    for _ in 0..n_samples {
        let w = rng.normal();
        let xi = p.sigma * rng.normal();
        acc.push(w * (w * p.h + xi).max(0.0));
    }
    acc.finish()
}

/// Estimates E[w^2 * r(w h + xi)^2], bounded by 3 h^2 + sigma^2.
pub fn mc_relu_gain_second_moment(p: &GainParams, n_samples: usize, seed: RngSeed) -> McEstimate {
    assert!(n_samples >= 10_000);
    let mut rng = Rng::new(seed);
    let mut acc = McAccumulator::new();
    for _ in 0..n_samples {
        let w = rng.normal();
        let r = (w * p.h + rng.normal() * p.sigma).max(0.0);
        acc.push(w * w * r * r);
    }
    acc.finish()
}

/// Two correlated weights feeding one rectified channel.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CrossCorrParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
}

impl CrossCorrParams {
    pub fn warnings(&self) -> Vec<String> {
        let cap = 5.0 * self.sigma.ln();
        let mut w = Vec::new();
        if self.a > cap || self.b > cap {
            w.push(format!(
                "cross-correlation: a = {} or b = {} exceeds 5 ln(sigma) = {cap:.3}",
                self.a, self.b
            ));
        }
        w
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CrossCorrEstimate {
    /// E[u v r(a u + b v + xi)^2].
    pub joint: McEstimate,
    /// E[u r(...)] * E[v r(...)], with a delta-method standard error.
    pub product: McEstimate,
    /// |joint - product|; bounded by a constant independent of sigma.
    pub gap: f64,
}

/// Estimates the joint moment and the product of marginal moments on the
/// same sample stream and reports their gap.
pub fn mc_cross_correlation(
    p: &CrossCorrParams,
    n_samples: usize,
    seed: RngSeed,
) -> CrossCorrEstimate {
    assert!(n_samples >= 100_000, "cross-correlation needs at least 1e5 samples");
    let mut rng = Rng::new(seed);
    let mut joint = McAccumulator::new();
    let mut mu = McAccumulator::new();
    let mut mv = McAccumulator::new();
    let mut cross = 0.0f64; // for Cov(u r, v r)
    let mut us = 0.0f64;
    let mut vs = 0.0f64;
    for _ in 0..n_samples {
        let u = rng.normal();
        let v = rng.normal();
        let xi = p.sigma * rng.normal();
        let r = (p.a * u + p.b * v + xi).max(0.0);
        joint.push(u * v * r * r);
        let su = u * r;
        let sv = v * r;
        mu.push(su);
        mv.push(sv);
        cross += su * sv;
        us += su;
        vs += sv;
    }
    let n = n_samples as f64;
    let eu = mu.finish();
    let ev = mv.finish();
    let cov_uv = cross / n - (us / n) * (vs / n);
    // Delta method for the product A*B including the same-stream covariance.
    let var_prod = (ev.mean * ev.mean) * eu.std_error * eu.std_error
        + (eu.mean * eu.mean) * ev.std_error * ev.std_error
        + 2.0 * eu.mean * ev.mean * cov_uv / n;
    let product = McEstimate {
        mean: eu.mean * ev.mean,
        std_error: var_prod.max(0.0).sqrt(),
        n_samples,
    };
    let j = joint.finish();
    CrossCorrEstimate {
        joint: j,
        product,
        gap: (j.mean - product.mean).abs(),
    }
}

/// Parameters of the Hermite-weighted kernel: the truncated quadratic
/// integral k(z) = ∫_0^(scale z) (scale z - y)^2 phi_sigma(y) dy weighted by
/// the second Hermite polynomial z^2 - 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HermiteKernelParams {
    /// Multiplier on z inside the truncated integral.
    pub scale: f64,
    /// Width of the Gaussian density in the integrand.
    pub sigma: f64,
}

impl HermiteKernelParams {
    pub fn warnings(&self) -> Vec<String> {
        let cap = 10.0 * self.sigma.ln();
        if self.scale > cap {
            vec![format!(
                "hermite kernel: scale = {} exceeds 10 ln(sigma) = {cap:.3}",
                self.scale
            )]
        } else {
            Vec::new()
        }
    }
}

/// k(z) = ∫_0^(scale z) (scale z - y)^2 phi_sigma(y) dy, signed for z < 0.
/// Adaptive Simpson to 1e-10 absolute, depth at most 40.
pub fn kernel_integral(p: &HermiteKernelParams, z: f64) -> f64 {
    let upper = p.scale * z;
    if upper == 0.0 {
        return 0.0;
    }
    let sigma = p.sigma;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let f = move |y: f64| {
        let d = upper - y;
        d * d * norm * (-0.5 * (y / sigma) * (y / sigma)).exp()
    };
    adaptive_simpson(f, 0.0, upper, 1e-10, 40)
}

/// (z^2 - 1) * k(z).
pub fn hermite_weighted(p: &HermiteKernelParams, z: f64) -> f64 {
    (z * z - 1.0) * kernel_integral(p, z)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HermiteMoments {
    pub signed: McEstimate,
    pub absolute: McEstimate,
}

/// Monte-Carlo moments of the weighted kernel over z ~ N(0,1); both the
/// signed mean and the mean absolute value are reported.
pub fn mc_hermite_weighted(
    p: &HermiteKernelParams,
    n_samples: usize,
    seed: RngSeed,
) -> HermiteMoments {
    assert!(n_samples >= 10_000);
    let mut rng = Rng::new(seed);
    let mut signed = McAccumulator::new();
    let mut absolute = McAccumulator::new();
    for _ in 0..n_samples {
        let h = hermite_weighted(p, rng.normal());
        signed.push(h);
        absolute.push(h.abs());
    }
    HermiteMoments {
        signed: signed.finish(),
        absolute: absolute.finish(),
    }
}
