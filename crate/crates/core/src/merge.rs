//! Aligning two embedding sources in one space.
//!
//! Rows for the shared vocabulary are concatenated, `C = [m1 | m2]`, and
//! reduced with a truncated SVD `C ≈ U S Vᵀ`. Shared terms get the rows of
//! `U · S^p` where `p` is the [`SingularValueScaling`] exponent. Because
//! `U S = C V`, the same map applies to any row `x = [x1 | x2]`:
//! `x ↦ (x1 V1 + x2 V2) · S^(p−1)`. A term known to only one source uses
//! its own block of `V` and a zero for the other. Every output row is
//! unit-normalized.

use std::collections::BTreeSet;
use std::ops::Range;

use log::warn;
use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, TermUri};
use crate::linalg::{truncated_svd, unit_normalize_rows, EmbeddingMatrix};
use crate::ppmi::expand_to_pruned;

/// Exponent applied to the singular values on output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SingularValueScaling {
    /// `U · S`. Keeps the row Gram matrix of `C` up to truncation, so
    /// identical sources reproduce their cosine structure.
    #[default]
    Full,
    /// `U · S^½`, the convention used for the graph-only embeddings.
    Sqrt,
}

impl SingularValueScaling {
    fn exponent(self) -> f64 {
        match self {
            SingularValueScaling::Full => 1.0,
            SingularValueScaling::Sqrt => 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MergePlan {
    /// Shared terms in URI order.
    pub common_vocab: Vec<TermUri>,
    pub k: usize,
    pub seed: u64,
    /// Column ranges of each source in the concatenated matrix.
    pub blocks: [Range<usize>; 2],
    pub scaling: SingularValueScaling,
}

impl MergePlan {
    pub fn new(m1: &EmbeddingMatrix, m2: &EmbeddingMatrix, k: usize, seed: u64) -> Result<Self> {
        let mut common_vocab: Vec<TermUri> =
            m1.vocab().iter().filter(|t| m2.contains(t)).cloned().collect();
        if common_vocab.is_empty() {
            return Err(Error::EmptyIntersection(
                "the two embedding sources share no terms".into(),
            ));
        }
        common_vocab.sort();
        let width = m1.dim() + m2.dim();
        if k == 0 || k > width {
            return Err(Error::RankTooLarge { k, max: width });
        }
        Ok(MergePlan {
            common_vocab,
            k,
            seed,
            blocks: [0..m1.dim(), m1.dim()..width],
            scaling: SingularValueScaling::default(),
        })
    }

    pub fn with_scaling(mut self, scaling: SingularValueScaling) -> Self {
        self.scaling = scaling;
        self
    }

    /// Fits the shared basis.
    pub fn fit(&self, m1: &EmbeddingMatrix, m2: &EmbeddingMatrix) -> Result<MergeModel> {
        if m1.dim() != self.blocks[0].len() || m2.dim() != self.blocks[1].len() {
            return Err(Error::DimensionMismatch {
                left: m1.dim() + m2.dim(),
                right: self.blocks[1].end,
            });
        }
        for (name, m) in [("first", m1), ("second", m2)] {
            if !m.is_unit_normalized(1e-6) {
                warn!("{name} merge input has rows that are not unit length");
            }
        }
        let n = self.common_vocab.len();
        let mut c = Array2::zeros((n, self.blocks[1].end));
        for (i, t) in self.common_vocab.iter().enumerate() {
            let (Some(r1), Some(r2)) = (m1.get(t), m2.get(t)) else {
                return Err(Error::UnknownNode(t.to_string()));
            };
            c.slice_mut(s![i, self.blocks[0].clone()])
                .assign(&ArrayView1::from(r1));
            c.slice_mut(s![i, self.blocks[1].clone()])
                .assign(&ArrayView1::from(r2));
        }
        let svd = truncated_svd(&c, self.k, self.seed)?;
        let p = self.scaling.exponent();
        let common = &svd.u * &svd.s.mapv(|x| x.powf(p)).view().insert_axis(Axis(0));
        // S^(p−1), with zero singular values mapped to zero
        let projection_scale = svd
            .s
            .mapv(|x| if x > 0.0 { x.powf(p - 1.0) } else { 0.0 });
        Ok(MergeModel {
            plan: self.clone(),
            v: svd.v,
            s: svd.s,
            projection_scale,
            common,
        })
    }
}

/// A fitted alignment.
#[derive(Clone, Debug)]
pub struct MergeModel {
    plan: MergePlan,
    v: Array2<f64>,
    s: Array1<f64>,
    projection_scale: Array1<f64>,
    common: Array2<f64>,
}

impl MergeModel {
    pub fn plan(&self) -> &MergePlan {
        &self.plan
    }

    pub fn singular_values(&self) -> &Array1<f64> {
        &self.s
    }

    pub fn v1(&self) -> ndarray::ArrayView2<'_, f64> {
        self.v.slice(s![self.plan.blocks[0].clone(), ..])
    }

    pub fn v2(&self) -> ndarray::ArrayView2<'_, f64> {
        self.v.slice(s![self.plan.blocks[1].clone(), ..])
    }

    /// Unnormalized merged rows of the shared vocabulary, in plan order.
    pub fn common_rows(&self) -> &Array2<f64> {
        &self.common
    }

    /// Maps source rows into the merged space without normalizing. A
    /// missing side contributes nothing.
    pub fn project(&self, x1: Option<&[f64]>, x2: Option<&[f64]>) -> Result<Array1<f64>> {
        let mut out = Array1::zeros(self.plan.k);
        for (x, block) in [(x1, self.v1()), (x2, self.v2())] {
            if let Some(x) = x {
                if x.len() != block.nrows() {
                    return Err(Error::DimensionMismatch {
                        left: x.len(),
                        right: block.nrows(),
                    });
                }
                out += &ArrayView1::from(x).dot(&block);
            }
        }
        Ok(out * &self.projection_scale)
    }

    /// Merged, unit-normalized embeddings over the union vocabulary: `m1`'s
    /// order, then `m2`-only terms in `m2`'s order.
    pub fn apply(&self, m1: &EmbeddingMatrix, m2: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        let mut vocab: Vec<TermUri> = m1.vocab().to_vec();
        vocab.extend(m2.vocab().iter().filter(|t| !m1.contains(t)).cloned());
        let mut data = Array2::zeros((vocab.len(), self.plan.k));
        for (i, t) in vocab.iter().enumerate() {
            let row = match self.plan.common_vocab.binary_search(t) {
                Ok(pos) => self.common.row(pos).to_owned(),
                Err(_) => self.project(m1.get(t), m2.get(t))?,
            };
            data.row_mut(i).assign(&row);
        }
        unit_normalize_rows(&mut data);
        EmbeddingMatrix::new(vocab, data)
    }
}

/// Merges two sources into `k` dimensions.
pub fn merge(m1: &EmbeddingMatrix, m2: &EmbeddingMatrix, k: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let plan = MergePlan::new(m1, m2, k, seed)?;
    plan.fit(m1, m2)?.apply(m1, m2)
}

/// Gives every term of `pruned` that the merged matrix lacks a vector
/// averaged from its graph neighbors, exactly as
/// [`expand_to_pruned`](crate::ppmi::expand_to_pruned) does.
pub fn expand_merge_to_graph(
    merged: &EmbeddingMatrix,
    g_full: &KnowledgeGraph,
    pruned: &BTreeSet<TermUri>,
) -> EmbeddingMatrix {
    expand_to_pruned(merged, g_full, pruned)
}
