//! Evaluation harnesses: word relatedness, multiple-choice analogies and
//! story cloze, plus the statistics they report.

mod analogy;
mod cloze;
mod relatedness;
pub mod stats;

use std::fmt;
use std::io::Write;

use crate::error::Result;
use crate::graph::{normalize_term, tokenize, TermUri};
use crate::linalg::EmbeddingMatrix;

pub use analogy::{
    analogy_score, grid_search_weights, grid_values, load_analogies, solve_analogies,
    AnalogyQuestion, AnalogyResult, AnalogyWeights,
};
pub use cloze::{eval_cloze, eval_cloze_with, load_cloze, ClozeOptions, ClozeResult, ClozeStory};
pub use relatedness::{
    eval_relatedness, load_relatedness, RelatednessDataset, RelatednessPair, RelatednessResult,
    Split, SplitRule,
};
pub use stats::{average_ranks, binomial_ci, fisher_ci, pearson, spearman};

/// Resolves a raw query to a term: strings starting with `/c/` are parsed
/// as URIs, anything else is normalized in `language`.
pub fn resolve(raw: &str, language: &str) -> Option<TermUri> {
    if raw.starts_with("/c/") {
        TermUri::parse(raw).ok()
    } else {
        normalize_term(raw, language).ok()
    }
}

/// The row for `raw`, retrying without a sense suffix. `None` means
/// out of vocabulary.
pub fn lookup_row<'a>(emb: &'a EmbeddingMatrix, raw: &str, language: &str) -> Option<&'a [f64]> {
    let term = resolve(raw, language)?;
    emb.get(&term)
        .or_else(|| term.sense().and_then(|_| emb.get(&term.without_sense())))
}

/// Like [`lookup_row`], but an unknown term yields the zero vector.
pub fn lookup(emb: &EmbeddingMatrix, raw: &str, language: &str) -> Vec<f64> {
    lookup_row(emb, raw, language)
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![0.0; emb.dim()])
}

/// Whole-phrase lookup, falling back to the mean of the phrase's token
/// vectors (unknown tokens count as zero). `None` when nothing is known.
pub fn lookup_phrase(emb: &EmbeddingMatrix, raw: &str, language: &str) -> Option<Vec<f64>> {
    if let Some(row) = lookup_row(emb, raw, language) {
        return Some(row.to_vec());
    }
    let tokens = tokenize(raw);
    if tokens.len() < 2 {
        return None;
    }
    let mut acc = vec![0.0; emb.dim()];
    let mut found = false;
    for tok in &tokens {
        if let Some(row) = lookup_row(emb, tok, language) {
            found = true;
            acc.iter_mut().zip(row).for_each(|(a, x)| *a += x);
        }
    }
    if !found {
        return None;
    }
    let n = tokens.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Some(acc)
}

/// One line of an evaluation report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub metric: String,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    pub oov: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

pub const REPORT_COLUMNS: [&str; 7] = ["name", "metric", "value", "ci_low", "ci_high", "n", "oov"];

impl Report {
    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", REPORT_COLUMNS.join("\t"))?;
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
                r.name, r.metric, r.value, r.ci_low, r.ci_high, r.n, r.oov
            )?;
        }
        Ok(())
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "{self}")?;
        Ok(())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        writeln!(
            f,
            "{:<width$}  {:<8}  {:>6}  {:>15}  {:>6}  {:>5}",
            "name", "metric", "value", "95% CI", "n", "oov"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<width$}  {:<8}  {:>6.3}  {:>15}  {:>6}  {:>5}",
                r.name,
                r.metric,
                r.value,
                format!("[{:.3}, {:.3}]", r.ci_low, r.ci_high),
                r.n,
                r.oov
            )?;
        }
        Ok(())
    }
}
