//! Synthetic inputs from a hidden layer through the tied (untransposed)
//! weights, optional per-layer sampling noise, 3x3 smoothing for image
//! data, and the reconstruction-style regularizer gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matvec, relu, relu_prime, Matrix};
use crate::rng::{bernoulli_mask, derive_seed, RngSeed};
use crate::train::mlp::MlpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceLayer {
    H2,
    H3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthOptions {
    pub source_layer: SourceLayer,
    /// Multiply each generated layer by a Bernoulli keep mask.
    pub sampling: bool,
    pub sampling_keep: f64,
    /// Box-filter the synthetic input; requires `image_shape`.
    pub smoothing: bool,
    pub image_shape: Option<(usize, usize, usize)>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            source_layer: SourceLayer::H2,
            sampling: false,
            sampling_keep: 0.5,
            smoothing: false,
            image_shape: None,
        }
    }
}

/// Generates a synthetic input from a hidden activation by running the
/// same weight matrices downward (no copies, no transposes). Sampling, if
/// enabled, masks each generated layer; smoothing box-filters the result.
pub fn shadow_synthesize(
    params: &MlpParams,
    h_top: &[f64],
    opts: &SynthOptions,
    seed: RngSeed,
) -> Result<Vec<f64>> {
    if opts.smoothing && opts.image_shape.is_none() {
        return Err(Error::invalid("smoothing requires an image shape"));
    }
    let mut step = 0u64;
    let mut down = |w: &Matrix, v: &[f64]| -> Result<Vec<f64>> {
        let mut out = relu(&matvec(w, v)?);
        if opts.sampling {
            let mask = bernoulli_mask(out.len(), opts.sampling_keep, derive_seed(seed, step));
            for (o, m) in out.iter_mut().zip(&mask) {
                *o *= m;
            }
        }
        step += 1;
        Ok(out)
    };

    let h2 = match opts.source_layer {
        SourceLayer::H2 => {
            if h_top.len() != params.w2.cols() {
                return Err(Error::dim(
                    format!("h2 of length {}", params.w2.cols()),
                    format!("{}", h_top.len()),
                ));
            }
            h_top.to_vec()
        }
        SourceLayer::H3 => {
            if h_top.len() != params.w3.cols() {
                return Err(Error::dim(
                    format!("h3 of length {}", params.w3.cols()),
                    format!("{}", h_top.len()),
                ));
            }
            down(&params.w3, h_top)?
        }
    };
    let h1 = down(&params.w2, &h2)?;
    let x = down(&params.w1, &h1)?;
    if opts.smoothing {
        let shape = opts.image_shape.unwrap();
        smooth3x3(&x, shape)
    } else {
        Ok(x)
    }
}

/// Per-channel 3x3 box filter with edge replication. Layout is planar:
/// index = (channel * height + y) * width + x.
pub fn smooth3x3(img: &[f64], shape: (usize, usize, usize)) -> Result<Vec<f64>> {
    let (w, h, c) = shape;
    if img.len() != w * h * c {
        return Err(Error::dim(
            format!("{} pixels for shape {w}x{h}x{c}", w * h * c),
            format!("{}", img.len()),
        ));
    }
    let mut out = vec![0.0; img.len()];
    for ch in 0..c {
        let plane = &img[ch * w * h..(ch + 1) * w * h];
        let dst = &mut out[ch * w * h..(ch + 1) * w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let yy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                        let xx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                        acc += plane[yy * w + xx];
                    }
                }
                dst[y * w + x] = acc / 9.0;
            }
        }
    }
    Ok(out)
}

/// Gradient of the generative log-likelihood approximation for one layer:
/// by default (x - r(Wh) ⊙ r'(Wh)) h^T as printed in the usual derivation,
/// or the masked variant ((x - r(Wh)) ⊙ r'(Wh)) h^T, which is the exact
/// gradient of -1/2 ||x - r(Wh)||^2. A kept subset T restricts the
/// residual to those rows (the stochastic form).
pub fn regularizer_grad(
    w: &Matrix,
    h: &[f64],
    x: &[f64],
    masked_variant: bool,
    subset_t: Option<&[usize]>,
) -> Result<Matrix> {
    if x.len() != w.rows() {
        return Err(Error::dim(
            format!("x of length {}", w.rows()),
            format!("{}", x.len()),
        ));
    }
    let wh = matvec(w, h)?;
    let rw = relu(&wh);
    let rp = relu_prime(&wh);
    let mut residual: Vec<f64> = if masked_variant {
        x.iter()
            .zip(&rw)
            .zip(&rp)
            .map(|((&xi, &ri), &pi)| (xi - ri) * pi)
            .collect()
    } else {
        x.iter()
            .zip(&rw)
            .zip(&rp)
            .map(|((&xi, &ri), &pi)| xi - ri * pi)
            .collect()
    };
    if let Some(kept) = subset_t {
        let mut keep = vec![false; residual.len()];
        for &i in kept {
            if i >= residual.len() {
                return Err(Error::invalid(format!("subset index {i} out of range")));
            }
            keep[i] = true;
        }
        for (r, k) in residual.iter_mut().zip(&keep) {
            if !k {
                *r = 0.0;
            }
        }
    }
    let mut grad = Matrix::zeros(w.rows(), w.cols());
    for (i, &ri) in residual.iter().enumerate() {
        if ri == 0.0 {
            continue;
        }
        for (j, &hj) in h.iter().enumerate() {
            grad.set(i, j, ri * hj);
        }
    }
    Ok(grad)
}
