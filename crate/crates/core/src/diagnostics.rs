//! Random-like weight diagnostics: entry moments, offset-vector uniformity,
//! and the singular spectrum against the quarter-circle and
//! Marchenko-Pastur reference laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::quad::adaptive_simpson;

/// Sample moments of the matrix entries (population normalization, so an
/// alternating +1/-1 matrix reports variance exactly 1).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub n_entries: usize,
}

pub fn weight_moments(w: &Matrix) -> Result<MomentReport> {
    let data = w.data();
    if data.len() < 4 {
        return Err(Error::invalid("moment report needs at least 4 entries"));
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in data {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    Ok(MomentReport {
        mean,
        variance: m2,
        skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
        excess_kurtosis: if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 },
        n_entries: data.len(),
    })
}

/// Offset vectors observed in practice are nearly constant; their
/// mean-to-deviation ratio quantifies that.
pub const UNIFORM_LIKE_RATIO: f64 = 5.0;

/// |mean| / population std of a vector; +infinity when the std is zero.
/// Ratios at or above [`UNIFORM_LIKE_RATIO`] count as uniform-like.
pub fn bias_uniformity(b: &[f64]) -> Result<f64> {
    if b.len() < 2 {
        return Err(Error::invalid("uniformity needs at least 2 entries"));
    }
    let n = b.len() as f64;
    let mean = b.iter().sum::<f64>() / n;
    let var = b.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(mean.abs() / var.sqrt())
}

/// Scaled singular spectrum with its distance to the matching reference law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Singular values divided by sqrt(max(rows, cols)), descending.
    pub singular_values_scaled: Vec<f64>,
    /// Kolmogorov-Smirnov distance to the reference law; present when the
    /// spectrum has at least 8 values.
    pub ks_distance: Option<f64>,
    /// min(rows, cols) / max(rows, cols).
    pub aspect_ratio: f64,
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix; returns the
/// eigenvalues. Converges when the off-diagonal Frobenius norm drops below
/// tol relative to the initial Frobenius norm; errors after 100 sweeps.
fn jacobi_eigenvalues(a: &mut Matrix, tol: f64) -> Result<Vec<f64>> {
    let n = a.rows();
    let total = a.frobenius_norm();
    if total == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let off = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m.get(i, j) * m.get(i, j);
                }
            }
        }
        s.sqrt()
    };
    for _sweep in 0..100 {
        if off(a) <= tol * total {
            return Ok((0..n).map(|i| a.get(i, i)).collect());
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotate rows and columns p, q.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    Err(Error::NumericFailure(
        "Jacobi sweeps did not converge within 100 iterations".into(),
    ))
}

/// Singular values via the eigen-decomposition of the smaller Gram matrix,
/// scaled by 1/sqrt(max(rows, cols)). `tol` is relative to the Gram
/// Frobenius norm; 1e-10 is the usual setting.
pub fn singular_spectrum(w: &Matrix, tol: f64) -> Result<SpectrumReport> {
    if w.rows() < 2 || w.cols() < 2 {
        return Err(Error::invalid("spectrum needs at least a 2x2 matrix"));
    }
    let (rows, cols) = (w.rows(), w.cols());
    let small = rows.min(cols);
    let large = rows.max(cols);
    // Gram of the smaller side: W^T W when cols <= rows, else W W^T.
    let mut gram = Matrix::zeros(small, small);
    if cols <= rows {
        for i in 0..small {
            for j in i..small {
                let mut acc = 0.0;
                for r in 0..rows {
                    acc += w.get(r, i) * w.get(r, j);
                }
                gram.set(i, j, acc);
                gram.set(j, i, acc);
            }
        }
    } else {
        for i in 0..small {
            for j in i..small {
                let mut acc = 0.0;
                let (ri, rj) = (w.row(i), w.row(j));
                for c in 0..cols {
                    acc += ri[c] * rj[c];
                }
                gram.set(i, j, acc);
                gram.set(j, i, acc);
            }
        }
    }
    let eigs = jacobi_eigenvalues(&mut gram, tol)?;
    let scale = (large as f64).sqrt();
    let mut sv: Vec<f64> = eigs.iter().map(|&l| l.max(0.0).sqrt() / scale).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let aspect_ratio = small as f64 / large as f64;
    let ks_distance = if sv.len() >= 8 {
        Some(ks_against_reference(&sv, aspect_ratio))
    } else {
        None
    };
    Ok(SpectrumReport {
        singular_values_scaled: sv,
        ks_distance,
        aspect_ratio,
    })
}

/// CDF of the quarter-circle law on [0, 2], clamped outside.
pub fn quarter_circle_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 2.0 {
        return 1.0;
    }
    (s * (4.0 - s * s).sqrt() / 2.0 + 2.0 * (s / 2.0).asin()) / std::f64::consts::PI
}

fn mp_edges(ratio: f64) -> (f64, f64) {
    let r = ratio.sqrt();
    ((1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r))
}

/// Marchenko-Pastur density expressed in the singular-value variable
/// sigma = sqrt(x); the change of variables removes the 1/sqrt(x) edge
/// singularity, and at ratio 1 this is exactly the quarter-circle density.
fn mp_sv_density(ratio: f64, s: f64) -> f64 {
    let (lo, hi) = mp_edges(ratio);
    let x = s * s;
    if x <= lo || x >= hi {
        return 0.0;
    }
    ((hi - x) * (x - lo)).sqrt() / (std::f64::consts::PI * ratio * s)
}

/// CDF of scaled singular values under the Marchenko-Pastur law for the
/// given aspect ratio in (0, 1]; numerically integrated at ratio < 1 and
/// exactly the quarter-circle CDF at ratio 1.
pub fn mp_cdf(s: f64, aspect_ratio: f64) -> f64 {
    assert!(
        aspect_ratio > 0.0 && aspect_ratio <= 1.0,
        "aspect ratio must lie in (0, 1]"
    );
    if s <= 0.0 {
        return 0.0;
    }
    let (lo, hi) = mp_edges(aspect_ratio);
    let (slo, shi) = (lo.sqrt(), hi.sqrt());
    if s <= slo {
        return 0.0;
    }
    if s >= shi {
        return 1.0;
    }
    adaptive_simpson(|v| mp_sv_density(aspect_ratio, v), slo, s, 1e-8, 40).clamp(0.0, 1.0)
}

fn reference_cdf(aspect_ratio: f64, s: f64) -> f64 {
    if aspect_ratio == 1.0 {
        quarter_circle_cdf(s)
    } else {
        mp_cdf(s, aspect_ratio)
    }
}

fn ks_against_reference(sv: &[f64], aspect_ratio: f64) -> f64 {
    let mut sorted = sv.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        let f = reference_cdf(aspect_ratio, s);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - f).abs());
    }
    d
}

/// Kolmogorov-Smirnov distance of a spectrum report against its reference
/// law; needs at least 8 singular values.
pub fn spectrum_ks(report: &SpectrumReport) -> Result<f64> {
    if report.singular_values_scaled.len() < 8 {
        return Err(Error::invalid("KS distance needs at least 8 singular values"));
    }
    Ok(ks_against_reference(
        &report.singular_values_scaled,
        report.aspect_ratio,
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramData {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Equal-width histogram over [min, max] with a right-closed last bin.
pub fn histogram(values: &[f64], n_bins: usize) -> Result<HistogramData> {
    if values.is_empty() {
        return Err(Error::invalid("histogram needs a nonempty input"));
    }
    if n_bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let edges: Vec<f64> = (0..=n_bins)
        .map(|i| min + span * i as f64 / n_bins as f64)
        .collect();
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let idx = if span == 0.0 {
            0
        } else {
            (((v - min) / span * n_bins as f64) as usize).min(n_bins - 1)
        };
        counts[idx] += 1;
    }
    Ok(HistogramData {
        bin_edges: edges,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, RngSeed};
    use proptest::prelude::*;

    #[test]
    fn moments_of_degenerate_matrices() {
        let z = Matrix::zeros(3, 3);
        let m = weight_moments(&z).unwrap();
        assert_eq!(m.mean, 0.0);
        assert_eq!(m.variance, 0.0);

        let data: Vec<f64> = (0..16).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let alt = Matrix::from_vec(4, 4, data).unwrap();
        let m = weight_moments(&alt).unwrap();
        assert_eq!(m.mean, 0.0);
        assert!((m.variance - 1.0).abs() < 1e-15);
        assert!((m.excess_kurtosis + 2.0).abs() < 1e-12);

        assert!(weight_moments(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn moments_of_a_large_gaussian_matrix() {
        let w = gaussian_matrix(1000, 1000, RngSeed::new(50));
        let m = weight_moments(&w).unwrap();
        assert!(m.skewness.abs() <= 0.01, "skewness {}", m.skewness);
        assert!(m.excess_kurtosis.abs() <= 0.02, "kurtosis {}", m.excess_kurtosis);
    }

    #[test]
    fn uniformity_ratios() {
        assert_eq!(bias_uniformity(&[1.0, 1.0, 1.0]).unwrap(), f64::INFINITY);
        assert_eq!(bias_uniformity(&[1.0, -1.0]).unwrap(), 0.0);
        let r = bias_uniformity(&[1.0, 1.1, 0.9]).unwrap();
        let expected = 10.0 * (3.0f64 / 2.0).sqrt();
        assert!((r - expected).abs() < 1e-9, "{r}");
        assert!(r >= UNIFORM_LIKE_RATIO);
        assert!(bias_uniformity(&[1.0]).is_err());
    }

    #[test]
    fn spectrum_of_identity_and_diagonal() {
        let id = Matrix::identity(16);
        let rep = singular_spectrum(&id, 1e-10).unwrap();
        for &s in &rep.singular_values_scaled {
            assert!((s - 0.25).abs() < 1e-12); // 1/sqrt(16)
        }

        let mut d = Matrix::zeros(3, 3);
        d.set(0, 0, 3.0);
        d.set(1, 1, 2.0);
        d.set(2, 2, 1.0);
        let rep = singular_spectrum(&d, 1e-10).unwrap();
        let sqrt3 = 3.0f64.sqrt();
        let got: Vec<f64> = rep
            .singular_values_scaled
            .iter()
            .map(|s| s * sqrt3)
            .collect();
        assert!((got[0] - 3.0).abs() < 1e-9);
        assert!((got[1] - 2.0).abs() < 1e-9);
        assert!((got[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spectrum_trace_identity_and_scaling() {
        let w = gaussian_matrix(64, 64, RngSeed::new(51));
        let rep = singular_spectrum(&w, 1e-10).unwrap();
        let sum_sq: f64 = rep
            .singular_values_scaled
            .iter()
            .map(|s| s * s * 64.0)
            .sum();
        let fro2 = w.frobenius_norm().powi(2);
        assert!((sum_sq - fro2).abs() <= 1e-8 * fro2);

        // Scaling invariance: singular values of 3W are 3x those of W.
        let scaled_data: Vec<f64> = w.data().iter().map(|v| 3.0 * v).collect();
        let w3 = Matrix::from_vec(64, 64, scaled_data).unwrap();
        let rep3 = singular_spectrum(&w3, 1e-10).unwrap();
        for (a, b) in rep.singular_values_scaled.iter().zip(&rep3.singular_values_scaled) {
            assert!((3.0 * a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn rectangular_spectrum_uses_smaller_gram() {
        let w = gaussian_matrix(96, 24, RngSeed::new(52));
        let rep = singular_spectrum(&w, 1e-10).unwrap();
        assert_eq!(rep.singular_values_scaled.len(), 24);
        assert!((rep.aspect_ratio - 0.25).abs() < 1e-12);
        let wide = gaussian_matrix(24, 96, RngSeed::new(53));
        let rep_w = singular_spectrum(&wide, 1e-10).unwrap();
        assert_eq!(rep_w.singular_values_scaled.len(), 24);
    }

    #[test]
    fn quarter_circle_endpoints_and_value() {
        assert_eq!(quarter_circle_cdf(0.0), 0.0);
        assert_eq!(quarter_circle_cdf(2.0), 1.0);
        assert_eq!(quarter_circle_cdf(-1.0), 0.0);
        assert_eq!(quarter_circle_cdf(3.0), 1.0);
        // Closed-form antiderivative at sqrt(2).
        let v = quarter_circle_cdf(2.0f64.sqrt());
        assert!((v - 0.8183).abs() < 1e-4, "{v}");
    }

    #[test]
    fn mp_cdf_matches_quarter_circle_at_ratio_one() {
        for i in 0..=40 {
            let s = i as f64 * 0.05;
            let a = mp_cdf(s, 1.0);
            let b = quarter_circle_cdf(s);
            assert!((a - b).abs() <= 1e-6, "s = {s}: {a} vs {b}");
        }
    }

    #[test]
    fn mp_cdf_is_a_cdf() {
        for ratio in [0.25, 0.5, 1.0] {
            let (_, hi) = mp_edges(ratio);
            assert!(mp_cdf(0.0, ratio) == 0.0);
            assert!((mp_cdf(hi.sqrt(), ratio) - 1.0).abs() < 1e-6);
            let mut prev = 0.0;
            for i in 0..=100 {
                let s = hi.sqrt() * i as f64 / 100.0;
                let f = mp_cdf(s, ratio);
                assert!(f >= prev - 1e-9);
                prev = f;
            }
        }
    }

    #[test]
    fn ks_of_exact_quantile_sample_is_small() {
        // Sample placed exactly at the reference quantiles: KS <= 1/n.
        let n = 64;
        let mut sv: Vec<f64> = (0..n)
            .map(|i| {
                let target = (i as f64 + 0.5) / n as f64;
                // Invert the quarter-circle CDF by bisection.
                let (mut lo, mut hi) = (0.0f64, 2.0f64);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if quarter_circle_cdf(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let rep = SpectrumReport {
            singular_values_scaled: sv,
            ks_distance: None,
            aspect_ratio: 1.0,
        };
        let ks = spectrum_ks(&rep).unwrap();
        assert!(ks <= 1.0 / n as f64 + 1e-9, "ks = {ks}");
    }

    #[test]
    fn gaussian_passes_and_identity_fails() {
        let w = gaussian_matrix(512, 512, RngSeed::new(54));
        let rep = singular_spectrum(&w, 1e-10).unwrap();
        let ks = rep.ks_distance.unwrap();
        assert!(ks <= 0.05, "gaussian KS = {ks}");

        let id = Matrix::identity(512);
        let rep = singular_spectrum(&id, 1e-10).unwrap();
        let ks = rep.ks_distance.unwrap();
        assert!(ks >= 0.5, "identity KS = {ks}");
    }

    #[test]
    fn histogram_basics() {
        let h = histogram(&[5.0], 1).unwrap();
        assert_eq!(h.counts, vec![1]);

        let h = histogram(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(h.counts, vec![2, 2]);

        assert!(histogram(&[], 3).is_err());
        assert!(histogram(&[1.0], 0).is_err());
    }

    proptest! {
        #[test]
        fn histogram_conserves_mass(
            values in proptest::collection::vec(-1e3f64..1e3, 1..200),
            bins in 1usize..20,
        ) {
            let h = histogram(&values, bins).unwrap();
            prop_assert_eq!(h.counts.iter().sum::<u64>(), values.len() as u64);
            prop_assert_eq!(h.bin_edges.len(), h.counts.len() + 1);
        }

        #[test]
        fn quarter_circle_monotone(grid in 0usize..1000) {
            let s0 = 2.0 * grid as f64 / 1000.0;
            let s1 = 2.0 * (grid + 1) as f64 / 1000.0;
            prop_assert!(quarter_circle_cdf(s1) >= quarter_circle_cdf(s0));
        }
    }
}
