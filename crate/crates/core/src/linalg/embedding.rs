use std::collections::HashMap;

use ndarray::{Array2, ArrayView1};

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::graph::TermUri;

/// Dense row-labeled matrix of `d`-dimensional term vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: Vec<TermUri>,
    index: HashMap<TermUri, usize>,
    data: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn new(vocab: Vec<TermUri>, data: Array2<f64>) -> Result<Self> {
        if vocab.len() != data.nrows() {
            return Err(Error::LengthMismatch {
                left: vocab.len(),
                right: data.nrows(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, t) in vocab.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate vocabulary entry {t}")));
            }
        }
        let data = data.as_standard_layout().into_owned();
        Ok(EmbeddingMatrix { vocab, index, data })
    }

    /// Builds a matrix from `(term, vector)` rows.
    pub fn from_rows<I, V>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (TermUri, V)>,
        V: AsRef<[f64]>,
    {
        let mut vocab = Vec::new();
        let mut flat = Vec::new();
        let mut dim = None;
        for (t, v) in rows {
            let v = v.as_ref();
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::DimensionMismatch {
                        left: d,
                        right: v.len(),
                    })
                }
                _ => {}
            }
            vocab.push(t);
            flat.extend_from_slice(v);
        }
        let d = dim.unwrap_or(0);
        let data = Array2::from_shape_vec((vocab.len(), d), flat).expect("row lengths checked");
        Self::new(vocab, data)
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn vocab(&self) -> &[TermUri] {
        &self.vocab
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_parts(self) -> (Vec<TermUri>, Array2<f64>) {
        (self.vocab, self.data)
    }

    pub fn index_of(&self, term: &TermUri) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn index_of_str(&self, uri: &str) -> Option<usize> {
        self.index.get(uri).copied()
    }

    pub fn contains(&self, term: &TermUri) -> bool {
        self.index.contains_key(term)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.data
            .row(i)
            .to_slice()
            .expect("rows are contiguous in standard layout")
    }

    pub fn row_view(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn get(&self, term: &TermUri) -> Option<&[f64]> {
        self.index_of(term).map(|i| self.row(i))
    }

    pub fn get_str(&self, uri: &str) -> Option<&[f64]> {
        self.index_of_str(uri).map(|i| self.row(i))
    }

    /// True when every row is either zero or has unit norm within `tol`.
    pub fn is_unit_normalized(&self, tol: f64) -> bool {
        self.data.rows().into_iter().all(|r| {
            let n = r.dot(&r).sqrt();
            n == 0.0 || (n - 1.0).abs() <= tol
        })
    }

    /// The `k` rows most cosine-similar to `query`, best first; equal
    /// scores keep row order.
    pub fn nearest(&self, query: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        if query.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: query.len(),
                right: self.dim(),
            });
        }
        let mut scored = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            scored.push((i, super::cosine(query, self.row(i))?));
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }
}

impl LinearOperator for EmbeddingMatrix {
    fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        self.data.dot(x)
    }

    fn apply_transpose(&self, x: &Array2<f64>) -> Array2<f64> {
        self.data.t().dot(x)
    }

    fn is_finite(&self) -> bool {
        true
    }
}
