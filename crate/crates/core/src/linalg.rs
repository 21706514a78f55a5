//! Dense row-major matrices and the rectifier family.

use crate::error::{Error, Result};

/// Dense matrix of 64-bit floats, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds from explicit data; validates the length and that every
    /// entry is finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(
                format!("{} entries", rows * cols),
                format!("{}", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Internal constructor for data known to be valid.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1);
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// w * v for w of shape (rows x cols) and v of length cols.
pub fn matvec(w: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != w.cols {
        return Err(Error::dim(
            format!("vector of length {}", w.cols),
            format!("{}", v.len()),
        ));
    }
    let mut out = vec![0.0; w.rows];
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w.data[i * w.cols..(i + 1) * w.cols];
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    Ok(out)
}

/// w^T * v for w of shape (rows x cols) and v of length rows.
pub fn matvec_t(w: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != w.rows {
        return Err(Error::dim(
            format!("vector of length {}", w.rows),
            format!("{}", v.len()),
        ));
    }
    let mut out = vec![0.0; w.cols];
    // Stream the rows so access stays contiguous.
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        let row = &w.data[i * w.cols..(i + 1) * w.cols];
        for (o, &wij) in out.iter_mut().zip(row) {
            *o += wij * vi;
        }
    }
    Ok(out)
}

/// Entrywise max(v, 0).
pub fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// Entrywise subgradient indicator: 1 where v > 0, else 0 (0 at the kink,
/// so relu(v) * relu_prime(v) = relu(v) holds exactly).
pub fn relu_prime(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
