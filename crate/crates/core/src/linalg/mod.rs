//! Matrices and vector geometry shared by every pipeline stage.

mod embedding;
mod sparse;
mod svd;

use ndarray::{Array1, Array2, Axis};

pub use embedding::EmbeddingMatrix;
pub use sparse::SparseMatrix;
pub use svd::{truncated_svd, truncated_svd_with, SvdOptions, SvdResult};

use crate::error::{Error, Result};

/// Anything that can multiply dense blocks of column vectors.
pub trait LinearOperator {
    fn shape(&self) -> (usize, usize);
    /// `A X`, with `X` of shape `(n_cols, b)`.
    fn apply(&self, x: &Array2<f64>) -> Array2<f64>;
    /// `Aᵀ X`, with `X` of shape `(n_rows, b)`.
    fn apply_transpose(&self, x: &Array2<f64>) -> Array2<f64>;
    fn is_finite(&self) -> bool;
}

impl LinearOperator for Array2<f64> {
    fn shape(&self) -> (usize, usize) {
        self.dim()
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        self.dot(x)
    }

    fn apply_transpose(&self, x: &Array2<f64>) -> Array2<f64> {
        self.t().dot(x)
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(a, b) / denom).clamp(-1.0, 1.0))
}

/// Rows whose norm falls below this fraction of the largest input row norm
/// are treated as zero by the normalizing helpers.
const ZERO_ROW_RTOL: f64 = 1e-12;

/// Subtracts the column mean from every row, then scales each nonzero row
/// to unit length. Rows that become zero stay zero.
pub fn center_and_unit_normalize(m: &EmbeddingMatrix) -> EmbeddingMatrix {
    let mask = vec![true; m.len()];
    center_and_unit_normalize_masked(m, &mask)
}

/// Like [`center_and_unit_normalize`], but only rows with `include[i]` take
/// part in the mean and get shifted; the other rows are left untouched.
pub fn center_and_unit_normalize_masked(m: &EmbeddingMatrix, include: &[bool]) -> EmbeddingMatrix {
    assert_eq!(include.len(), m.len());
    let (vocab, mut data) = m.clone().into_parts();
    let scale = max_row_norm(&data);
    let selected: Vec<usize> = (0..data.nrows()).filter(|&i| include[i]).collect();
    if !selected.is_empty() {
        let mut mean = Array1::<f64>::zeros(data.ncols());
        for &i in &selected {
            mean += &data.row(i);
        }
        mean /= selected.len() as f64;
        for &i in &selected {
            let mut row = data.row_mut(i);
            row -= &mean;
        }
    }
    normalize_rows_in_place(&mut data, scale);
    EmbeddingMatrix::new(vocab, data).expect("vocabulary unchanged")
}

/// Scales every nonzero row to unit length.
pub fn unit_normalize_rows(data: &mut Array2<f64>) {
    let scale = max_row_norm(data);
    normalize_rows_in_place(data, scale);
}

fn max_row_norm(data: &Array2<f64>) -> f64 {
    data.axis_iter(Axis(0))
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0, f64::max)
}

fn normalize_rows_in_place(data: &mut Array2<f64>, scale: f64) {
    let threshold = ZERO_ROW_RTOL * scale.max(f64::MIN_POSITIVE);
    for mut row in data.axis_iter_mut(Axis(0)) {
        let n = row.dot(&row).sqrt();
        if n <= threshold {
            row.fill(0.0);
        } else {
            row /= n;
        }
    }
}
