//! Expanded retrofitting.
//!
//! Given original vectors `q̂_i` and a weighted graph, find vectors `q_i`
//! minimizing
//!
//! ```text
//! Ψ(Q) = Σ_i α_i ‖q_i − q̂_i‖² + Σ_{(i,j) ∈ E} β_ij ‖q_i − q_j‖²
//! ```
//!
//! over the union of the embedding vocabulary and the graph vocabulary.
//! Terms without an original vector get `α_i = 0` and start at zero; edge
//! weights become `β_ij`. Each unordered edge is counted once in `Ψ`.
//!
//! Minimization uses simultaneous (Jacobi) sweeps of the exact coordinate
//! update `q_i ← (α_i q̂_i + Σ_j β_ij q_j) / (α_i + Σ_j β_ij)`. Jacobi sweeps
//! do not always decrease `Ψ`; the first time one would increase it, that
//! sweep and every later one is replaced by an in-place Gauss-Seidel sweep
//! in vocabulary order, which never increases `Ψ`.

use std::collections::{BTreeMap, HashMap, VecDeque};

use log::{debug, warn};
use ndarray::{Array2, ArrayView1, Zip};

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, TermUri};
use crate::linalg::{center_and_unit_normalize_masked, EmbeddingMatrix};

/// How graph edge weights turn into `β_ij`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BetaWeighting {
    /// `β_ij` is the summed edge weight.
    #[default]
    EdgeWeight,
    /// `β_ij = w_ij / sqrt(d_i d_j)` with `d` the weighted degree.
    DegreeNormalized,
}

#[derive(Clone, Debug)]
pub struct RetrofitConfig {
    pub max_iterations: usize,
    /// Stop when the mean per-row Euclidean movement of a sweep drops
    /// below this.
    pub convergence_tol: f64,
    pub center_and_normalize: bool,
}

impl Default for RetrofitConfig {
    fn default() -> Self {
        RetrofitConfig {
            max_iterations: 10,
            convergence_tol: 1e-4,
            center_and_normalize: true,
        }
    }
}

impl RetrofitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return Err(Error::InvalidConfig("convergence_tol must be positive".into()));
        }
        Ok(())
    }
}

/// One instance of the retrofitting objective.
#[derive(Clone, Debug)]
pub struct RetrofitProblem {
    vocab: Vec<TermUri>,
    q_hat: Array2<f64>,
    alpha: Vec<f64>,
    /// Symmetric adjacency without self-loops, sorted by neighbor.
    neighbors: Vec<Vec<(usize, f64)>>,
    unreachable: usize,
}

impl RetrofitProblem {
    /// Builds a problem from explicit parts. `edges` are unordered pairs;
    /// duplicates are summed and self-loops dropped (they add nothing to Ψ).
    pub fn new(
        vocab: Vec<TermUri>,
        q_hat: Array2<f64>,
        alpha: Vec<f64>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = vocab.len();
        if q_hat.nrows() != n || alpha.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: if q_hat.nrows() != n { q_hat.nrows() } else { alpha.len() },
            });
        }
        if alpha.iter().any(|&a| !(a.is_finite() && a >= 0.0)) {
            return Err(Error::InvalidConfig("α must be finite and non-negative".into()));
        }
        if q_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidConfig(format!("edge ({i}, {j}) out of range")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidConfig(format!("β must be positive, got {w}")));
            }
            if i != j {
                *merged.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for ((i, j), w) in merged {
            neighbors[i].push((j, w));
            neighbors[j].push((i, w));
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(j, _)| j);
        }
        let mut p = RetrofitProblem {
            vocab,
            q_hat: q_hat.as_standard_layout().into_owned(),
            alpha,
            neighbors,
            unreachable: 0,
        };
        p.unreachable = p.count_unreachable();
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.q_hat.ncols()
    }

    pub fn vocab(&self) -> &[TermUri] {
        &self.vocab
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn q_hat(&self) -> &Array2<f64> {
        &self.q_hat
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn beta(&self, i: usize, j: usize) -> f64 {
        let row = &self.neighbors[i];
        row.binary_search_by_key(&j, |&(n, _)| n)
            .map(|p| row[p].1)
            .unwrap_or(0.0)
    }

    /// Unordered edges `(i, j, β_ij)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges().count()
    }

    /// Terms with `α = 0` that no `α > 0` term reaches through the graph.
    /// They keep the zero vector.
    pub fn unreachable_count(&self) -> usize {
        self.unreachable
    }

    fn count_unreachable(&self) -> usize {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| self.alpha[i] > 0.0).collect();
        for &i in &queue {
            seen[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.iter().filter(|s| !**s).count()
    }

    fn initial(&self) -> Array2<f64> {
        let mut q = self.q_hat.clone();
        for (i, &a) in self.alpha.iter().enumerate() {
            if a == 0.0 {
                q.row_mut(i).fill(0.0);
            }
        }
        q
    }

    fn objective_dense(&self, q: &Array2<f64>) -> f64 {
        let mut total = 0.0;
        for i in 0..self.len() {
            if self.alpha[i] != 0.0 {
                total += self.alpha[i] * sq_dist(q.row(i), self.q_hat.row(i));
            }
        }
        for (i, j, b) in self.edges() {
            total += b * sq_dist(q.row(i), q.row(j));
        }
        total
    }

    /// Exact minimizer of Ψ over row `i` with all other rows fixed, written
    /// into `out`. Returns false (leaving `out` alone) for isolated `α = 0`
    /// rows.
    fn update_row(&self, i: usize, q: &Array2<f64>, out: &mut [f64]) -> bool {
        let a = self.alpha[i];
        let mut denom = a;
        out.iter_mut().for_each(|x| *x = 0.0);
        if a != 0.0 {
            for (o, &h) in out.iter_mut().zip(self.q_hat.row(i)) {
                *o = a * h;
            }
        }
        for &(j, b) in &self.neighbors[i] {
            denom += b;
            for (o, &x) in out.iter_mut().zip(q.row(j)) {
                *o += b * x;
            }
        }
        if denom == 0.0 {
            return false;
        }
        out.iter_mut().for_each(|x| *x /= denom);
        true
    }

    fn jacobi_sweep(&self, q: &Array2<f64>) -> Array2<f64> {
        let mut next = q.clone();
        let mut buf = vec![0.0; self.dim()];
        for i in 0..self.len() {
            if self.update_row(i, q, &mut buf) {
                next.row_mut(i).assign(&ArrayView1::from(&buf[..]));
            }
        }
        next
    }

    fn gauss_seidel_sweep(&self, q: &Array2<f64>) -> Array2<f64> {
        let mut next = q.clone();
        let mut buf = vec![0.0; self.dim()];
        for i in 0..self.len() {
            if self.update_row(i, &next, &mut buf) {
                next.row_mut(i).assign(&ArrayView1::from(&buf[..]));
            }
        }
        next
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let mut s = 0.0;
    Zip::from(&a).and(&b).for_each(|x, y| s += (x - y) * (x - y));
    s
}

/// Builds the expanded problem with `β_ij` equal to summed edge weights.
pub fn build_problem(emb: &EmbeddingMatrix, g: &KnowledgeGraph) -> Result<RetrofitProblem> {
    build_problem_with(emb, g, BetaWeighting::EdgeWeight)
}

/// The vocabulary is the embedding vocabulary (in its order) followed by the
/// graph-only terms (in URI order). `α` is 1 for embedded terms and 0 for
/// graph-only terms.
pub fn build_problem_with(
    emb: &EmbeddingMatrix,
    g: &KnowledgeGraph,
    weighting: BetaWeighting,
) -> Result<RetrofitProblem> {
    if !g.is_empty() && !emb.vocab().iter().any(|t| g.node_id(t).is_some()) {
        return Err(Error::EmptyIntersection(
            "no embedding row names a graph node; check that both use the same term URIs".into(),
        ));
    }
    let mut vocab = emb.vocab().to_vec();
    let mut position: HashMap<usize, usize> = HashMap::with_capacity(g.num_nodes());
    for (id, node) in g.nodes().iter().enumerate() {
        let pos = match emb.index_of(node) {
            Some(row) => row,
            None => {
                vocab.push(node.clone());
                vocab.len() - 1
            }
        };
        position.insert(id, pos);
    }
    let n = vocab.len();
    let mut q_hat = Array2::zeros((n, emb.dim()));
    q_hat
        .slice_mut(ndarray::s![..emb.len(), ..])
        .assign(emb.data());
    let mut alpha = vec![0.0; n];
    alpha[..emb.len()].fill(1.0);

    let weighted_degree: Vec<f64> = (0..g.num_nodes())
        .map(|i| {
            g.neighbors(i)
                .iter()
                .filter(|&&(j, _)| j != i)
                .map(|&(_, w)| w)
                .sum()
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..g.num_nodes() {
        for &(j, w) in g.neighbors(i) {
            if j <= i {
                continue;
            }
            let beta = match weighting {
                BetaWeighting::EdgeWeight => w,
                BetaWeighting::DegreeNormalized => {
                    w / (weighted_degree[i] * weighted_degree[j]).sqrt()
                }
            };
            edges.push((position[&i], position[&j], beta));
        }
    }
    let p = RetrofitProblem::new(vocab, q_hat, alpha, edges)?;
    if p.unreachable_count() > 0 {
        warn!(
            "{} graph-only terms are not connected to any embedded term and will stay zero",
            p.unreachable_count()
        );
    }
    Ok(p)
}

/// Ψ(Q) for `q`, whose rows are looked up by term.
pub fn objective(p: &RetrofitProblem, q: &EmbeddingMatrix) -> Result<f64> {
    if q.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            left: q.dim(),
            right: p.dim(),
        });
    }
    let mut dense = Array2::zeros((p.len(), p.dim()));
    for (i, t) in p.vocab().iter().enumerate() {
        let row = q
            .get(t)
            .ok_or_else(|| Error::UnknownNode(t.to_string()))?;
        dense.row_mut(i).assign(&ArrayView1::from(row));
    }
    Ok(p.objective_dense(&dense))
}

/// Progress record of one retrofitting run.
#[derive(Clone, Debug, Default)]
pub struct RetrofitTrace {
    /// Ψ of the starting point, then after each sweep (before centering).
    pub objective: Vec<f64>,
    /// Mean per-row movement of each sweep.
    pub movement: Vec<f64>,
    /// Index of the first sweep run as Gauss-Seidel, if any.
    pub gauss_seidel_from: Option<usize>,
    pub converged: bool,
}

impl RetrofitTrace {
    pub fn iterations(&self) -> usize {
        self.movement.len()
    }
}

pub fn retrofit(p: &RetrofitProblem, cfg: &RetrofitConfig) -> Result<EmbeddingMatrix> {
    retrofit_with_trace(p, cfg).map(|(m, _)| m)
}

pub fn retrofit_with_trace(
    p: &RetrofitProblem,
    cfg: &RetrofitConfig,
) -> Result<(EmbeddingMatrix, RetrofitTrace)> {
    cfg.validate()?;
    let mut trace = RetrofitTrace::default();
    let mut q = p.initial();
    let mut psi = p.objective_dense(&q);
    trace.objective.push(psi);

    for it in 0..cfg.max_iterations {
        let mut next = if trace.gauss_seidel_from.is_some() {
            p.gauss_seidel_sweep(&q)
        } else {
            p.jacobi_sweep(&q)
        };
        let mut next_psi = p.objective_dense(&next);
        if trace.gauss_seidel_from.is_none() && next_psi > psi {
            debug!("Jacobi sweep {it} raised the objective; switching to Gauss-Seidel");
            trace.gauss_seidel_from = Some(it);
            next = p.gauss_seidel_sweep(&q);
            next_psi = p.objective_dense(&next);
        }
        let movement = if p.is_empty() {
            0.0
        } else {
            (0..p.len())
                .map(|i| sq_dist(next.row(i), q.row(i)).sqrt())
                .sum::<f64>()
                / p.len() as f64
        };
        q = next;
        psi = next_psi;
        trace.objective.push(psi);
        trace.movement.push(movement);
        if movement < cfg.convergence_tol {
            trace.converged = true;
            break;
        }
    }

    let raw = EmbeddingMatrix::new(p.vocab.clone(), q)?;
    let out = if cfg.center_and_normalize {
        // rows still at zero carry no information and stay out of the mean
        let informative: Vec<bool> = raw
            .data()
            .rows()
            .into_iter()
            .map(|r| r.iter().any(|&x| x != 0.0))
            .collect();
        center_and_unit_normalize_masked(&raw, &informative)
    } else {
        raw
    };
    Ok((out, trace))
}
