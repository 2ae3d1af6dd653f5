//! Term embeddings computed from the graph alone.
//!
//! The stage prunes weakly connected terms, computes positive PMI with
//! context distributional smoothing over the term-term weight matrix,
//! reduces it with truncated SVD (rows `U·S^½`, unit-normalized), and finally
//! gives the pruned terms the average vector of their neighbors.

use std::collections::BTreeSet;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, TermUri};
use crate::linalg::{truncated_svd, unit_normalize_rows, EmbeddingMatrix, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PruneMode {
    /// Remove under-connected nodes repeatedly until none remain.
    Iterative,
    /// A single removal pass over the original degrees.
    SinglePass,
}

#[derive(Clone, Debug)]
pub struct PpmiConfig {
    pub prune_min_degree: usize,
    pub prune_mode: PruneMode,
    /// Exponent applied to context counts before normalizing them.
    pub smoothing_exponent: f64,
    pub k: usize,
    pub seed: u64,
}

impl Default for PpmiConfig {
    fn default() -> Self {
        PpmiConfig {
            prune_min_degree: 3,
            prune_mode: PruneMode::Iterative,
            smoothing_exponent: 0.75,
            k: 300,
            seed: 0,
        }
    }
}

impl PpmiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.smoothing_exponent > 0.0 && self.smoothing_exponent <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "smoothing exponent must lie in (0, 1], got {}",
                self.smoothing_exponent
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Removes nodes with fewer than `min_degree` distinct neighbors, repeating
/// until every remaining node qualifies.
pub fn prune_graph(g: &KnowledgeGraph, min_degree: usize) -> (KnowledgeGraph, BTreeSet<TermUri>) {
    prune_graph_with(g, min_degree, PruneMode::Iterative)
}

pub fn prune_graph_with(
    g: &KnowledgeGraph,
    min_degree: usize,
    mode: PruneMode,
) -> (KnowledgeGraph, BTreeSet<TermUri>) {
    let n = g.num_nodes();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|i| g.degree_of(i)).collect();

    let mut queue: Vec<usize> = (0..n).filter(|&i| degree[i] < min_degree).collect();
    for &i in &queue {
        alive[i] = false;
    }
    if mode == PruneMode::Iterative {
        while let Some(i) = queue.pop() {
            for &(j, _) in g.neighbors(i) {
                if j == i || !alive[j] {
                    continue;
                }
                degree[j] -= 1;
                if degree[j] < min_degree {
                    alive[j] = false;
                    queue.push(j);
                }
            }
        }
    }

    let pruned = (0..n)
        .filter(|&i| !alive[i])
        .map(|i| g.node(i).clone())
        .collect();
    (g.induced(&alive), pruned)
}

/// Positive PMI of the symmetric term-term weight matrix.
///
/// With `c_ij` the summed edge weights, `T = Σ c_ij`, row marginal
/// `p_i = Σ_j c_ij / T` and smoothed context marginal
/// `p̃_j = (Σ_i c_ij)^α / Σ_j' (Σ_i c_ij')^α`, each cell is
/// `max(0, ln(c_ij / T / (p_i p̃_j)))`. Smoothing makes the result slightly
/// asymmetric, so the returned matrix is `(M + Mᵀ) / 2`. Rows are labeled
/// with the graph's nodes.
pub fn build_ppmi(g: &KnowledgeGraph, cfg: &PpmiConfig) -> Result<SparseMatrix> {
    cfg.validate()?;
    let n = g.num_nodes();
    let row_sums: Vec<f64> = (0..n)
        .map(|i| g.neighbors(i).iter().map(|&(_, w)| w).sum())
        .collect();
    let total: f64 = row_sums.iter().sum();
    if n == 0 || total <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let alpha = cfg.smoothing_exponent;
    // The matrix is symmetric, so column sums equal row sums.
    let smoothed: Vec<f64> = row_sums.iter().map(|&c| c.powf(alpha)).collect();
    let smoothed_total: f64 = smoothed.iter().sum();

    let pmi = |i: usize, j: usize, c: f64| -> f64 {
        let joint = c / total;
        let p_row = row_sums[i] / total;
        let p_ctx = smoothed[j] / smoothed_total;
        (joint / (p_row * p_ctx)).ln().max(0.0)
    };

    let mut triplets = Vec::new();
    for i in 0..n {
        for &(j, c) in g.neighbors(i) {
            let v = 0.5 * (pmi(i, j, c) + pmi(j, i, c));
            if v > 0.0 {
                triplets.push((i, j, v));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, triplets)?
        .with_labels(g.nodes().to_vec())?
        .into_symmetric()
}

/// Reduces a symmetric PPMI matrix to `cfg.k` dimensions: rows of
/// `U_k · diag(S_k)^½`, each scaled to unit length.
pub fn reduce_symmetric(ppmi: &SparseMatrix, cfg: &PpmiConfig) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    let labels = ppmi
        .labels()
        .ok_or_else(|| Error::InvalidConfig("PPMI matrix has no row labels".into()))?
        .to_vec();
    let svd = truncated_svd(ppmi, cfg.k, cfg.seed)?;
    let scale = svd.s.mapv(f64::sqrt);
    let mut rows = svd.u * scale.view().insert_axis(Axis(0));
    unit_normalize_rows(&mut rows);
    EmbeddingMatrix::new(labels, rows)
}

/// Rounds of neighbor averaging before giving up on a node.
pub const EXPANSION_ROUNDS: usize = 10;

/// Adds a row for every term in `missing` by averaging the vectors of its
/// graph neighbors that already have one, weighted by edge weight, then
/// unit-normalizing.
///
/// Terms with no embedded neighbor wait for a later round, in which terms
/// resolved in earlier rounds count as embedded. After
/// [`EXPANSION_ROUNDS`] rounds the leftovers get the zero vector. Rows of
/// `emb` are copied unchanged; new rows are appended in URI order.
pub fn expand_to_pruned(
    emb: &EmbeddingMatrix,
    g_full: &KnowledgeGraph,
    missing: &BTreeSet<TermUri>,
) -> EmbeddingMatrix {
    let dim = emb.dim();
    let targets: Vec<&TermUri> = missing.iter().filter(|t| !emb.contains(t)).collect();
    let mut resolved: Vec<Option<Vec<f64>>> = vec![None; targets.len()];

    // graph id -> position in `targets`
    let mut target_of = vec![None; g_full.num_nodes()];
    for (pos, t) in targets.iter().enumerate() {
        if let Some(id) = g_full.node_id(t) {
            target_of[id] = Some(pos);
        }
    }

    for _round in 0..EXPANSION_ROUNDS {
        let mut fresh = Vec::new();
        for (pos, t) in targets.iter().enumerate() {
            if resolved[pos].is_some() {
                continue;
            }
            let Some(id) = g_full.node_id(t) else { continue };
            let mut acc = vec![0.0; dim];
            let mut contributors = 0;
            let mut first_weight = 1.0;
            for &(j, w) in g_full.neighbors(id) {
                if j == id {
                    continue;
                }
                let vector = match emb.index_of(g_full.node(j)) {
                    Some(row) => emb.row(row),
                    None => match target_of[j].and_then(|p| resolved[p].as_deref()) {
                        Some(v) => v,
                        None => continue,
                    },
                };
                contributors += 1;
                if contributors == 1 {
                    // a lone neighbor is copied, not scaled and rescaled
                    acc.copy_from_slice(vector);
                    first_weight = w;
                } else {
                    if first_weight != 1.0 {
                        acc.iter_mut().for_each(|a| *a *= first_weight);
                        first_weight = 1.0;
                    }
                    for (a, x) in acc.iter_mut().zip(vector) {
                        *a += w * x;
                    }
                }
            }
            if contributors > 0 {
                fresh.push((pos, acc));
            }
        }
        if fresh.is_empty() {
            break;
        }
        for (pos, mut v) in fresh {
            let n = crate::linalg::norm(&v);
            if n > 0.0 && (n - 1.0).abs() > 2.0 * f64::EPSILON {
                v.iter_mut().for_each(|x| *x /= n);
            }
            resolved[pos] = Some(v);
        }
    }

    let mut vocab = emb.vocab().to_vec();
    let mut data = Array2::zeros((emb.len() + targets.len(), dim));
    data.slice_mut(ndarray::s![..emb.len(), ..]).assign(emb.data());
    for (pos, t) in targets.iter().enumerate() {
        vocab.push((*t).clone());
        if let Some(v) = &resolved[pos] {
            data.row_mut(emb.len() + pos).assign(&ndarray::ArrayView1::from(v.as_slice()));
        }
    }
    EmbeddingMatrix::new(vocab, data).expect("new terms are disjoint from the input vocabulary")
}

/// Output of the whole graph-only embedding stage.
#[derive(Clone, Debug)]
pub struct PpmiEmbeddings {
    pub embeddings: EmbeddingMatrix,
    pub pruned: BTreeSet<TermUri>,
    pub nnz: usize,
}

/// Prune, PPMI, reduce, then re-expand to the pruned terms.
pub fn ppmi_embeddings(g: &KnowledgeGraph, cfg: &PpmiConfig) -> Result<PpmiEmbeddings> {
    cfg.validate()?;
    let (kept, pruned) = prune_graph_with(g, cfg.prune_min_degree, cfg.prune_mode);
    if kept.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let ppmi = build_ppmi(&kept, cfg)?;
    let reduced = reduce_symmetric(&ppmi, cfg)?;
    let embeddings = expand_to_pruned(&reduced, g, &pruned);
    Ok(PpmiEmbeddings {
        embeddings,
        pruned,
        nnz: ppmi.nnz(),
    })
}
