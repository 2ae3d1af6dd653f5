//! File-to-file pipeline stages, as run by the command-line tool.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::info;

use crate::error::{Error, Result};
use crate::eval::{
    eval_cloze_with, eval_relatedness, grid_search_weights, load_analogies, load_cloze,
    load_relatedness, lookup_row, solve_analogies, AnalogyWeights, ClozeOptions, Report,
    ReportRow, Split,
};
use crate::graph::{AssertionFormat, LoadOptions, LoadReport, TermUri};
use crate::io::{
    load_embeddings, load_graph, load_graph_dump, resolve_input, save_embeddings,
    save_graph_dump,
};
use crate::linalg::EmbeddingMatrix;
use crate::merge::{expand_merge_to_graph, MergePlan};
use crate::ppmi::{ppmi_embeddings, PpmiConfig};
use crate::retrofit::{build_problem_with, retrofit_with_trace, BetaWeighting, RetrofitConfig};

/// Settings shared by every stage.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub seed: u64,
    pub language: String,
    pub lax: bool,
    pub ppmi: PpmiConfig,
    pub retrofit: RetrofitConfig,
    pub beta: BetaWeighting,
    pub merge_dims: usize,
    /// Grid points per axis minus one for the analogy weight search.
    pub grid_steps: usize,
    pub write_header: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            language: "en".into(),
            lax: false,
            ppmi: PpmiConfig::default(),
            retrofit: RetrofitConfig::default(),
            beta: BetaWeighting::default(),
            merge_dims: 300,
            grid_steps: 10,
            write_header: true,
        }
    }
}

impl PipelineConfig {
    /// Sets the dimensionality of every stage that reduces.
    pub fn with_dims(mut self, dims: usize) -> Self {
        self.ppmi.k = dims;
        self.merge_dims = dims;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.ppmi.seed = seed;
        self
    }
}

#[derive(Clone, Debug)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub load: LoadReport,
}

/// Loads an assertion file and writes its canonical dump.
pub fn cmd_build_graph(
    input: &Path,
    format: AssertionFormat,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<GraphSummary> {
    let opts = LoadOptions {
        format,
        lax: cfg.lax,
        link_senses: true,
    };
    let (g, load) = load_graph(&resolve_input(input), &opts)?;
    save_graph_dump(output, &g)?;
    Ok(GraphSummary {
        nodes: g.num_nodes(),
        edges: g.num_edges(),
        load,
    })
}

#[derive(Clone, Debug)]
pub struct PpmiSummary {
    pub rows: usize,
    pub dims: usize,
    pub pruned: usize,
    pub nnz: usize,
}

/// Graph dump in, unit-normalized PPMI embeddings out.
pub fn cmd_ppmi(graph: &Path, output: &Path, cfg: &PipelineConfig) -> Result<PpmiSummary> {
    let g = load_graph_dump(&resolve_input(graph))?;
    let mut ppmi_cfg = cfg.ppmi.clone();
    ppmi_cfg.seed = cfg.seed;
    let out = ppmi_embeddings(&g, &ppmi_cfg)?;
    save_embeddings(output, &out.embeddings, cfg.write_header)?;
    Ok(PpmiSummary {
        rows: out.embeddings.len(),
        dims: out.embeddings.dim(),
        pruned: out.pruned.len(),
        nnz: out.nnz,
    })
}

#[derive(Clone, Debug)]
pub struct RetrofitSummary {
    pub rows: usize,
    pub added: usize,
    pub unreachable: usize,
    pub iterations: usize,
    pub converged: bool,
    pub gauss_seidel_from: Option<usize>,
    pub objective: Vec<f64>,
}

/// Retrofits an embedding file to a graph dump.
pub fn cmd_retrofit(
    embeddings: &Path,
    graph: &Path,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<RetrofitSummary> {
    let emb = load_embeddings(&resolve_input(embeddings), &cfg.language)?;
    let g = load_graph_dump(&resolve_input(graph))?;
    let problem = build_problem_with(&emb, &g, cfg.beta)?;
    let (out, trace) = retrofit_with_trace(&problem, &cfg.retrofit)?;
    save_embeddings(output, &out, cfg.write_header)?;
    Ok(RetrofitSummary {
        rows: out.len(),
        added: out.len() - emb.len(),
        unreachable: problem.unreachable_count(),
        iterations: trace.iterations(),
        converged: trace.converged,
        gauss_seidel_from: trace.gauss_seidel_from,
        objective: trace.objective,
    })
}

#[derive(Clone, Debug)]
pub struct MergeSummary {
    pub rows: usize,
    pub common: usize,
    pub expanded: usize,
}

/// Merges two embedding files; with a graph, also gives every graph node
/// missing from both sources a neighbor-averaged vector.
pub fn cmd_merge(
    first: &Path,
    second: &Path,
    graph: Option<&Path>,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<MergeSummary> {
    let m1 = load_embeddings(&resolve_input(first), &cfg.language)?;
    let m2 = load_embeddings(&resolve_input(second), &cfg.language)?;
    let plan = MergePlan::new(&m1, &m2, cfg.merge_dims, cfg.seed)?;
    let common = plan.common_vocab.len();
    let mut merged = plan.fit(&m1, &m2)?.apply(&m1, &m2)?;
    let mut expanded = 0;
    if let Some(graph) = graph {
        let g = load_graph_dump(&resolve_input(graph))?;
        let missing: BTreeSet<TermUri> =
            g.nodes().iter().filter(|t| !merged.contains(t)).cloned().collect();
        expanded = missing.len();
        merged = expand_merge_to_graph(&merged, &g, &missing);
    }
    save_embeddings(output, &merged, cfg.write_header)?;
    Ok(MergeSummary {
        rows: merged.len(),
        common,
        expanded,
    })
}

/// A relatedness file with the split to score.
#[derive(Clone, Debug)]
pub struct RelatednessInput {
    pub path: PathBuf,
    pub split: Split,
}

impl RelatednessInput {
    /// Parses `PATH` or `PATH@SPLIT`.
    pub fn parse(arg: &str, default_split: Split) -> Result<Self> {
        match arg.rsplit_once('@') {
            Some((path, split)) if matches!(split, "dev" | "test" | "all") => Ok(RelatednessInput {
                path: path.into(),
                split: split.parse()?,
            }),
            _ => Ok(RelatednessInput {
                path: arg.into(),
                split: default_split,
            }),
        }
    }

    fn name(&self) -> String {
        let stem = self
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.path.display().to_string());
        match self.split {
            Split::All => stem,
            s => format!("{stem}-{s}"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvalTasks {
    pub relatedness: Vec<RelatednessInput>,
    pub analogies: Option<PathBuf>,
    /// Fixed analogy weights; grid search when absent.
    pub analogy_weights: Option<AnalogyWeights>,
    pub cloze: Option<PathBuf>,
    pub cloze_include_oov: bool,
}

fn open_input(path: &Path) -> Result<(PathBuf, BufReader<File>)> {
    let path = resolve_input(path);
    let file = File::open(&path).map_err(|e| Error::from(e).in_file(&path))?;
    Ok((path, BufReader::new(file)))
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Runs every requested evaluation against an embedding file.
pub fn cmd_eval(embeddings: &Path, tasks: &EvalTasks, cfg: &PipelineConfig) -> Result<Report> {
    let emb = load_embeddings(&resolve_input(embeddings), &cfg.language)?;
    eval_embeddings(&emb, tasks, cfg)
}

pub fn eval_embeddings(emb: &EmbeddingMatrix, tasks: &EvalTasks, cfg: &PipelineConfig) -> Result<Report> {
    let mut report = Report::default();
    for input in &tasks.relatedness {
        let (path, reader) = open_input(&input.path)?;
        let ds = load_relatedness(reader, &dataset_name(&path), &cfg.language)
            .map_err(|e| e.in_file(&path))?;
        let r = eval_relatedness(emb, &ds, input.split)?;
        report.push(ReportRow {
            name: input.name(),
            metric: "spearman".into(),
            value: r.rho,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            n: r.n,
            oov: r.oov_count,
        });
    }
    if let Some(analogies) = &tasks.analogies {
        let (path, reader) = open_input(analogies)?;
        let questions = load_analogies(reader).map_err(|e| e.in_file(&path))?;
        let w = match tasks.analogy_weights {
            Some(w) => w,
            None => grid_search_weights(emb, &questions, &cfg.language, cfg.grid_steps)?,
        };
        info!("analogy weights w1={} w2={}", w.w1, w.w2);
        let r = solve_analogies(emb, &questions, w, &cfg.language)?;
        report.push(ReportRow {
            name: dataset_name(&path),
            metric: "accuracy".into(),
            value: r.accuracy,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            n: r.n,
            oov: r.oov_terms,
        });
    }
    if let Some(cloze) = &tasks.cloze {
        let (path, reader) = open_input(cloze)?;
        let stories = load_cloze(reader).map_err(|e| e.in_file(&path))?;
        let opts = ClozeOptions {
            language: cfg.language.clone(),
            include_oov: tasks.cloze_include_oov,
        };
        let r = eval_cloze_with(emb, &stories, &opts)?;
        report.push(ReportRow {
            name: dataset_name(&path),
            metric: "accuracy".into(),
            value: r.accuracy,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            n: r.n,
            oov: r.oov_tokens,
        });
    }
    Ok(report)
}

/// The `k` terms nearest to `query` by cosine, excluding the query itself.
pub fn neighbors(
    emb: &EmbeddingMatrix,
    query: &str,
    k: usize,
    language: &str,
) -> Result<Vec<(TermUri, f64)>> {
    let row = lookup_row(emb, query, language)
        .ok_or_else(|| Error::UnknownNode(query.to_string()))?
        .to_vec();
    let own = crate::eval::resolve(query, language).and_then(|t| {
        emb.index_of(&t)
            .or_else(|| emb.index_of(&t.without_sense()))
    });
    let hits = emb.nearest(&row, k + usize::from(own.is_some()))?;
    Ok(hits
        .into_iter()
        .filter(|&(i, _)| Some(i) != own)
        .take(k)
        .map(|(i, s)| (emb.vocab()[i].clone(), s))
        .collect())
}
