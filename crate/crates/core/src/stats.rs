//! Monte-Carlo estimates, quantiles, and least-squares line fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean with standard error and sample count.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by sqrt(n).
    pub std_error: f64,
    pub n_samples: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut acc = McAccumulator::new();
        for &s in samples {
            acc.push(s);
        }
        acc.finish()
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_std_error(&self, other: &McEstimate) -> f64 {
        (self.std_error * self.std_error + other.std_error * other.std_error).sqrt()
    }
}

/// Streaming Welford accumulator; mergeable so chunked parallel runs reduce
/// deterministically in chunk order.
#[derive(Debug, Clone, Copy, Default)]
pub struct McAccumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl McAccumulator {
    pub fn new() -> Self {
        McAccumulator::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(mut self, other: McAccumulator) -> McAccumulator {
        if other.n == 0 {
            return self;
        }
        if self.n == 0 {
            return other;
        }
        let n = (self.n + other.n) as f64;
        let delta = other.mean - self.mean;
        self.m2 += other.m2 + delta * delta * (self.n as f64) * (other.n as f64) / n;
        self.mean += delta * (other.n as f64) / n;
        self.n += other.n;
        self
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n - 1 in the denominator).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn finish(&self) -> McEstimate {
        assert!(self.n >= 2, "an estimate needs at least two samples");
        McEstimate {
            mean: self.mean,
            std_error: (self.variance() / self.n as f64).sqrt(),
            n_samples: self.n,
        }
    }
}

/// Quantile by linear interpolation on a sorted slice, q in [0, 1].
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&q));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile(&sorted, 0.5)
}

/// Least-squares line fit, typically over (log t, log error) points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_line(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::invalid("a slope fit needs at least 3 points"));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("slope fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}
