//! A three-layer MLP with rectified hidden layers and a linear output,
//! trained with softmax cross-entropy. Forward uses the transposed weights
//! so the same matrices run generatively in the other direction.

use crate::error::{Error, Result};
use crate::linalg::{matvec_t, Matrix};
use crate::rng::{derive_seed, Rng, RngSeed};

/// Weights and offsets. `w1` maps inputs to the first hidden layer via its
/// transpose (shape n_in x n_h1), and likewise up the stack, so the
/// generative direction is a plain (untransposed) product on the same
/// storage.
#[derive(Debug, Clone)]
pub struct MlpParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w3: Matrix,
    pub b3: Vec<f64>,
}

impl MlpParams {
    /// Gaussian init scaled by 1/sqrt(fan-in); offsets start at zero.
    pub fn random(n_in: usize, n_h1: usize, n_h2: usize, n_classes: usize, seed: RngSeed) -> Self {
        let scaled = |rows: usize, cols: usize, s: RngSeed| {
            let mut rng = Rng::new(s);
            let scale = 1.0 / (rows as f64).sqrt();
            let data = (0..rows * cols).map(|_| rng.normal() * scale).collect();
            Matrix::from_raw(rows, cols, data)
        };
        MlpParams {
            w1: scaled(n_in, n_h1, derive_seed(seed, 0)),
            b1: vec![0.0; n_h1],
            w2: scaled(n_h1, n_h2, derive_seed(seed, 1)),
            b2: vec![0.0; n_h2],
            w3: scaled(n_h2, n_classes, derive_seed(seed, 2)),
            b3: vec![0.0; n_classes],
        }
    }

    /// (n_in, n_h1, n_h2, n_classes).
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.w1.rows(), self.w1.cols(), self.w2.cols(), self.w3.cols())
    }
}

/// Dropout masks for the two hidden layers, pre-drawn 0/1 with inverted
/// scaling applied at use (activations divide by `keep`).
#[derive(Debug, Clone)]
pub struct DropoutMasks {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub keep: f64,
}

#[derive(Debug, Clone)]
pub struct Activations {
    pub pre1: Vec<f64>,
    pub h1: Vec<f64>,
    pub pre2: Vec<f64>,
    pub h2: Vec<f64>,
    pub logits: Vec<f64>,
}

fn apply_mask(v: &mut [f64], mask: &[f64], keep: f64) {
    for (x, &m) in v.iter_mut().zip(mask) {
        *x *= m / keep;
    }
}

pub fn mlp_forward(
    params: &MlpParams,
    x: &[f64],
    masks: Option<&DropoutMasks>,
) -> Result<Activations> {
    if x.len() != params.w1.rows() {
        return Err(Error::dim(
            format!("input of length {}", params.w1.rows()),
            format!("{}", x.len()),
        ));
    }
    let mut pre1 = matvec_t(&params.w1, x)?;
    for (p, b) in pre1.iter_mut().zip(&params.b1) {
        *p += b;
    }
    let mut h1: Vec<f64> = pre1.iter().map(|&v| v.max(0.0)).collect();
    if let Some(m) = masks {
        apply_mask(&mut h1, &m.h1, m.keep);
    }
    let mut pre2 = matvec_t(&params.w2, &h1)?;
    for (p, b) in pre2.iter_mut().zip(&params.b2) {
        *p += b;
    }
    let mut h2: Vec<f64> = pre2.iter().map(|&v| v.max(0.0)).collect();
    if let Some(m) = masks {
        apply_mask(&mut h2, &m.h2, m.keep);
    }
    let mut logits = matvec_t(&params.w3, &h2)?;
    for (p, b) in logits.iter_mut().zip(&params.b3) {
        *p += b;
    }
    Ok(Activations {
        pre1,
        h1,
        pre2,
        h2,
        logits,
    })
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w3: Matrix,
    pub b3: Vec<f64>,
}

impl Gradients {
    pub fn zeros(params: &MlpParams) -> Self {
        Gradients {
            w1: Matrix::zeros(params.w1.rows(), params.w1.cols()),
            b1: vec![0.0; params.b1.len()],
            w2: Matrix::zeros(params.w2.rows(), params.w2.cols()),
            b2: vec![0.0; params.b2.len()],
            w3: Matrix::zeros(params.w3.rows(), params.w3.cols()),
            b3: vec![0.0; params.b3.len()],
        }
    }

    pub fn accumulate(&mut self, other: &Gradients, weight: f64) {
        let add_m = |dst: &mut Matrix, src: &Matrix| {
            for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
                *d += weight * s;
            }
        };
        let add_v = |dst: &mut Vec<f64>, src: &[f64]| {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += weight * s;
            }
        };
        add_m(&mut self.w1, &other.w1);
        add_v(&mut self.b1, &other.b1);
        add_m(&mut self.w2, &other.w2);
        add_v(&mut self.b2, &other.b2);
        add_m(&mut self.w3, &other.w3);
        add_v(&mut self.b3, &other.b3);
    }

    pub fn scale(&mut self, factor: f64) {
        for m in [&mut self.w1, &mut self.w2, &mut self.w3] {
            for v in m.data_mut() {
                *v *= factor;
            }
        }
        for b in [&mut self.b1, &mut self.b2, &mut self.b3] {
            for v in b.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for m in [&self.w1, &self.w2, &self.w3] {
            acc += m.data().iter().map(|v| v * v).sum::<f64>();
        }
        for b in [&self.b1, &self.b2, &self.b3] {
            acc += b.iter().map(|v| v * v).sum::<f64>();
        }
        acc.sqrt()
    }
}

/// Shift-stabilized softmax probabilities.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Cross-entropy of a label under shift-stabilized softmax.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    -(logits[label] - max - log_sum)
}

/// Argmax with the lowest index winning ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn outer(a: &[f64], b: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(a.len(), b.len());
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            m.set(i, j, ai * bj);
        }
    }
    m
}

/// Exact gradients of softmax cross-entropy for one sample; returns the
/// loss alongside. Masks, when given, must match the forward pass.
pub fn mlp_backward(
    params: &MlpParams,
    x: &[f64],
    label: usize,
    masks: Option<&DropoutMasks>,
) -> Result<(Gradients, f64)> {
    let n_classes = params.w3.cols();
    if label >= n_classes {
        return Err(Error::invalid(format!(
            "label {label} outside {n_classes} classes"
        )));
    }
    let act = mlp_forward(params, x, masks)?;
    let loss = cross_entropy(&act.logits, label);

    let mut dz3 = softmax(&act.logits);
    dz3[label] -= 1.0;

    let gw3 = outer(&act.h2, &dz3);
    let db3 = dz3.clone();
    // dL/dh2 = W3 dz3 (forward used the transpose).
    let mut dh2 = crate::linalg::matvec(&params.w3, &dz3)?;
    if let Some(m) = masks {
        apply_mask(&mut dh2, &m.h2, m.keep);
    }
    let dz2: Vec<f64> = dh2
        .iter()
        .zip(&act.pre2)
        .map(|(&d, &p)| if p > 0.0 { d } else { 0.0 })
        .collect();

    let gw2 = outer(&act.h1, &dz2);
    let db2 = dz2.clone();
    let mut dh1 = crate::linalg::matvec(&params.w2, &dz2)?;
    if let Some(m) = masks {
        apply_mask(&mut dh1, &m.h1, m.keep);
    }
    let dz1: Vec<f64> = dh1
        .iter()
        .zip(&act.pre1)
        .map(|(&d, &p)| if p > 0.0 { d } else { 0.0 })
        .collect();

    let gw1 = outer(x, &dz1);
    let db1 = dz1;

    Ok((
        Gradients {
            w1: gw1,
            b1: db1,
            w2: gw2,
            b2: db2,
            w3: gw3,
            b3: db3,
        },
        loss,
    ))
}
