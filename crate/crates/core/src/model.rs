//! The generative side: sparse nonnegative hidden vectors, dropout-noised
//! ReLU layers, deep composition of those layers, and the linear baseline.
//!
//! A single layer maps a hidden vector h to an observable x = s(r(alpha W h))
//! where r is the rectifier, s zeroes coordinates according to a
//! [`DropoutSpec`], and alpha = 2/t for t the (expected) kept count. With
//! that scaling the plain transpose map W^T x recovers h in expectation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matvec, norm2, Matrix};
use crate::rng::{bernoulli_mask, derive_seed, gaussian_matrix, subset_mask, Rng, RngSeed};

/// How nonzero entries of a hidden vector are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueMode {
    /// Every support entry is exactly 1.
    Binary,
    /// Support entries i.i.d. uniform on [1/2, 3/2], then rescaled so the
    /// squared norm equals the sparsity.
    BoundedRandom,
}

/// Distribution of a sparse nonnegative hidden vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HiddenSpec {
    pub dim: usize,
    pub sparsity: usize,
    pub value_mode: ValueMode,
    /// Constant in the infinity-norm cap
    /// max(h) <= inf_cap_const * sqrt(ln dim) * ||h|| / sqrt(sparsity).
    pub inf_cap_const: f64,
}

impl HiddenSpec {
    pub fn binary(dim: usize, sparsity: usize) -> Self {
        HiddenSpec {
            dim,
            sparsity,
            value_mode: ValueMode::Binary,
            inf_cap_const: 2.0,
        }
    }

    pub fn bounded_random(dim: usize, sparsity: usize) -> Self {
        HiddenSpec {
            value_mode: ValueMode::BoundedRandom,
            ..HiddenSpec::binary(dim, sparsity)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.sparsity == 0 {
            return Err(Error::invalid("hidden dim and sparsity must be positive"));
        }
        if self.sparsity > self.dim {
            return Err(Error::invalid(format!(
                "sparsity {} exceeds dim {}",
                self.sparsity, self.dim
            )));
        }
        if self.inf_cap_const <= 0.0 {
            return Err(Error::invalid("inf_cap_const must be positive"));
        }
        Ok(())
    }

    fn inf_cap(&self, norm: f64) -> f64 {
        self.inf_cap_const * (self.dim as f64).ln().max(0.0).sqrt() * norm
            / (self.sparsity as f64).sqrt()
    }
}

/// A sampled hidden vector together with its support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HiddenVector {
    vec: Vec<f64>,
    support: Vec<usize>,
}

impl HiddenVector {
    pub fn vec(&self) -> &[f64] {
        &self.vec
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.vec)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.vec
    }
}

/// Dropout noise: either i.i.d. coordinate survival or a uniform
/// fixed-size kept subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DropoutSpec {
    /// Keep each coordinate independently with probability rho.
    Bernoulli { rho: f64 },
    /// Keep a uniformly random subset of exactly t coordinates.
    FixedSubset { t: usize },
}

/// Selector between the two dropout flavors when a kept count is already
/// known (deep generation derives per-layer specs from sparsities).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropoutMode {
    Bernoulli,
    FixedSubset,
}

impl DropoutSpec {
    pub fn from_kept(mode: DropoutMode, t: usize, n: usize) -> Self {
        match mode {
            DropoutMode::Bernoulli => DropoutSpec::Bernoulli {
                rho: t as f64 / n as f64,
            },
            DropoutMode::FixedSubset => DropoutSpec::FixedSubset { t },
        }
    }

    /// Expected (Bernoulli) or exact (fixed subset) kept count on n coords.
    pub fn expected_kept(&self, n: usize) -> f64 {
        match self {
            DropoutSpec::Bernoulli { rho } => rho * n as f64,
            DropoutSpec::FixedSubset { t } => *t as f64,
        }
    }

    pub fn draw_mask(&self, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
        match self {
            DropoutSpec::Bernoulli { rho } => {
                if !(0.0..=1.0).contains(rho) {
                    return Err(Error::invalid(format!("rho {rho} outside [0, 1]")));
                }
                Ok(bernoulli_mask(n, *rho, seed))
            }
            DropoutSpec::FixedSubset { t } => subset_mask(n, *t, seed),
        }
    }
}

/// One generative layer: out_dim x in_dim weights scaled by alpha, then
/// rectified and dropout-masked.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerGenSpec {
    pub out_dim: usize,
    pub in_dim: usize,
    pub alpha: f64,
    pub dropout: DropoutSpec,
}

impl LayerGenSpec {
    /// Default scaling alpha = 2/t with t the kept count of the dropout.
    pub fn with_default_alpha(out_dim: usize, in_dim: usize, dropout: DropoutSpec) -> Self {
        let t = dropout.expected_kept(out_dim);
        LayerGenSpec {
            out_dim,
            in_dim,
            alpha: 2.0 / t,
            dropout,
        }
    }
}

/// A stack of Gaussian weight matrices with per-layer widths, sparsities,
/// and scaling constants. Index 0 is the observable (bottom) layer.
#[derive(Debug, Clone)]
pub struct ShadowNet {
    /// weights[j] has shape widths[j] x widths[j+1].
    weights: Vec<Matrix>,
    /// widths[0..=depth], bottom to top.
    widths: Vec<usize>,
    /// Target kept counts per layer; sparsities[depth] is the top sparsity.
    sparsities: Vec<usize>,
    /// alphas[j] = 2 / sparsities[j].
    alphas: Vec<f64>,
}

impl ShadowNet {
    /// Fresh Gaussian weights for the given widths (bottom to top) and
    /// per-layer target sparsities.
    pub fn random(widths: &[usize], sparsities: &[usize], seed: RngSeed) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::invalid("a net needs at least two layers of widths"));
        }
        if sparsities.len() != widths.len() {
            return Err(Error::dim(
                format!("{} sparsities", widths.len()),
                format!("{}", sparsities.len()),
            ));
        }
        for (j, (&k, &n)) in sparsities.iter().zip(widths).enumerate() {
            if k == 0 || k > n {
                return Err(Error::invalid(format!(
                    "sparsity {k} invalid for width {n} at layer {j}"
                )));
            }
        }
        let weights = (0..widths.len() - 1)
            .map(|j| gaussian_matrix(widths[j], widths[j + 1], derive_seed(seed, j as u64)))
            .collect();
        let alphas = sparsities[..widths.len() - 1]
            .iter()
            .map(|&k| 2.0 / k as f64)
            .collect();
        Ok(ShadowNet {
            weights,
            widths: widths.to_vec(),
            sparsities: sparsities.to_vec(),
            alphas,
        })
    }

    /// Builds a net from given matrices; widths are inferred and sparsities
    /// default to the full widths (no dropout).
    pub fn from_weights(weights: Vec<Matrix>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("a net needs at least one weight matrix"));
        }
        let mut widths = vec![weights[0].rows()];
        for w in &weights {
            if w.rows() != *widths.last().unwrap() {
                return Err(Error::dim(
                    format!("{} rows", widths.last().unwrap()),
                    format!("{}", w.rows()),
                ));
            }
            widths.push(w.cols());
        }
        let sparsities = widths.clone();
        let alphas = sparsities[..widths.len() - 1]
            .iter()
            .map(|&k| 2.0 / k as f64)
            .collect();
        Ok(ShadowNet {
            weights,
            widths,
            sparsities,
            alphas,
        })
    }

    /// The layered net used by the support-recovery runs: a top layer of
    /// `top_width`, widening by `factor` per layer down.
    pub fn pyramid(
        top_width: usize,
        depth: usize,
        factor: usize,
        top_sparsity: usize,
        seed: RngSeed,
    ) -> Result<Self> {
        if depth == 0 || factor < 2 {
            return Err(Error::invalid("pyramid needs depth >= 1 and factor >= 2"));
        }
        let mut widths: Vec<usize> = (0..=depth)
            .map(|j| top_width * factor.pow((depth - j) as u32))
            .collect();
        widths[depth] = top_width;
        let sparsities = Self::default_sparsities(&widths, top_sparsity);
        ShadowNet::random(&widths, &sparsities, seed)
    }

    /// Default sparsity ladder for recovery runs: generated layers keep
    /// their full width (rectification already zeroes about half), only the
    /// top carries the requested sparsity. Subsampled layers are opted into
    /// per experiment.
    pub fn default_sparsities(widths: &[usize], top_sparsity: usize) -> Vec<usize> {
        let depth = widths.len() - 1;
        let mut ks: Vec<usize> = widths.to_vec();
        ks[depth] = top_sparsity;
        ks
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn sparsities(&self) -> &[usize] {
        &self.sparsities
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn weight(&self, j: usize) -> &Matrix {
        &self.weights[j]
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    /// Total node count across all layers.
    pub fn total_nodes(&self) -> usize {
        self.widths.iter().sum()
    }

    /// Generation spec for layer j (producing widths[j] from widths[j+1]).
    pub fn layer_spec(&self, j: usize, mode: DropoutMode) -> LayerGenSpec {
        let dropout = DropoutSpec::from_kept(mode, self.sparsities[j], self.widths[j]);
        LayerGenSpec {
            out_dim: self.widths[j],
            in_dim: self.widths[j + 1],
            alpha: self.alphas[j],
            dropout,
        }
    }
}

/// Draws a hidden vector: support uniform over size-k subsets, values per
/// the spec's mode, rescaled so the squared norm equals the sparsity in
/// bounded-random mode. Resamples (up to 100 attempts) if the infinity-norm
/// cap fails; hitting that limit signals a misconfigured spec.
pub fn sample_hidden(spec: &HiddenSpec, seed: RngSeed) -> Result<HiddenVector> {
    spec.validate()?;
    for attempt in 0..100u64 {
        let attempt_seed = derive_seed(seed, attempt);
        let mask = subset_mask(spec.dim, spec.sparsity, derive_seed(attempt_seed, 0))?;
        let support: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1.0)
            .map(|(i, _)| i)
            .collect();
        let mut vec = vec![0.0; spec.dim];
        match spec.value_mode {
            ValueMode::Binary => {
                for &i in &support {
                    vec[i] = 1.0;
                }
            }
            ValueMode::BoundedRandom => {
                let mut rng = Rng::new(derive_seed(attempt_seed, 1));
                for &i in &support {
                    vec[i] = 0.5 + rng.uniform();
                }
                let norm = norm2(&vec);
                let target = (spec.sparsity as f64).sqrt();
                for v in vec.iter_mut() {
                    *v *= target / norm;
                }
            }
        }
        let max = vec.iter().cloned().fold(0.0, f64::max);
        if max <= spec.inf_cap(norm2(&vec)) {
            return Ok(HiddenVector { vec, support });
        }
    }
    Err(Error::invalid(
        "hidden sampling exceeded 100 attempts under the infinity-norm cap",
    ))
}

/// One generative step: mask ⊙ r(alpha * W * h).
pub fn generate_layer(
    w: &Matrix,
    h: &[f64],
    gen: &LayerGenSpec,
    seed: RngSeed,
) -> Result<Vec<f64>> {
    if w.rows() != gen.out_dim || w.cols() != gen.in_dim {
        return Err(Error::dim(
            format!("{}x{} weights", gen.out_dim, gen.in_dim),
            format!("{}x{}", w.rows(), w.cols()),
        ));
    }
    let pre = matvec(w, h)?;
    let mask = gen.dropout.draw_mask(gen.out_dim, seed)?;
    Ok(pre
        .iter()
        .zip(&mask)
        .map(|(&z, &m)| (gen.alpha * z).max(0.0) * m)
        .collect())
}

/// Runs the generative stack top-down. Returns every layer for inspection,
/// ordered top to bottom: [h_top, ..., h1, x].
pub fn generate_deep(
    net: &ShadowNet,
    h_top: &HiddenVector,
    mode: DropoutMode,
    seed: RngSeed,
) -> Result<Vec<Vec<f64>>> {
    let depth = net.depth();
    if h_top.vec().len() != net.widths[depth] {
        return Err(Error::dim(
            format!("top vector of length {}", net.widths[depth]),
            format!("{}", h_top.vec().len()),
        ));
    }
    let mut layers = Vec::with_capacity(depth + 1);
    layers.push(h_top.vec().to_vec());
    let mut current = h_top.vec().to_vec();
    for j in (0..depth).rev() {
        let spec = net.layer_spec(j, mode);
        current = generate_layer(&net.weights[j], &current, &spec, derive_seed(seed, j as u64))?;
        layers.push(current.clone());
    }
    Ok(layers)
}

/// The deterministic linear baseline x = W h (no rectifier, no dropout).
pub fn linear_generate(w: &Matrix, h: &[f64]) -> Result<Vec<f64>> {
    matvec(w, h)
}
