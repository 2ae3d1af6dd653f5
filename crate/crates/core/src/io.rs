//! Text embedding files and path helpers.
//!
//! An embedding file holds one row per line: a label followed by `d`
//! space-separated decimals. An optional first line `n d` gives the counts;
//! a first line of exactly two integer tokens is always read as that
//! header. Labels starting with `/c/` are term URIs; any other label is
//! normalized as a term of the reader's language.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{
    load_assertions_with, normalize_term, AssertionFormat, KnowledgeGraph, LoadOptions, LoadReport,
    TermUri,
};
use crate::linalg::EmbeddingMatrix;

/// Environment variable naming a directory searched for relative input
/// paths that do not exist in the working directory.
pub const DATA_DIR_ENV: &str = "GRAPHVEC_DATA";

/// Resolves an input path, falling back to `$GRAPHVEC_DATA/<path>`.
pub fn resolve_input(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::from(e).in_file(path))
}

fn is_header(tokens: &[&str]) -> Option<(usize, usize)> {
    match tokens {
        [n, d] => Some((n.parse().ok()?, d.parse().ok()?)),
        _ => None,
    }
}

/// Reads an embedding file. Exact duplicate labels are an error; distinct
/// labels that normalize to the same term keep the first row.
pub fn read_embeddings<R: BufRead>(reader: R, language: &str) -> Result<EmbeddingMatrix> {
    let mut header = None;
    let mut dim = None;
    let mut vocab = Vec::new();
    let mut flat = Vec::new();
    let mut raw_seen = HashSet::new();
    let mut term_seen = HashSet::new();
    let mut first = true;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if std::mem::take(&mut first) {
            if let Some(h) = is_header(&tokens) {
                header = Some(h);
                dim = Some(h.1);
                continue;
            }
        }
        let (label, values) = tokens.split_first().expect("non-empty");
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::parse(
                    line_no,
                    format!("expected {d} values, found {}", values.len()),
                ))
            }
            _ => {}
        }
        if !raw_seen.insert(label.to_string()) {
            return Err(Error::parse(line_no, format!("duplicate label {label:?}")));
        }
        let term = if label.starts_with("/c/") {
            TermUri::parse(label).map_err(|e| Error::parse(line_no, e.to_string()))?
        } else {
            match normalize_term(label, language) {
                Ok(t) => t,
                Err(Error::EmptyAfterNormalization(_)) => {
                    warn!("line {line_no}: label {label:?} has no word characters; skipped");
                    continue;
                }
                Err(e) => return Err(Error::parse(line_no, e.to_string())),
            }
        };
        let mut row = Vec::with_capacity(values.len());
        for v in values {
            let x: f64 = v
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad value {v:?}")))?;
            if !x.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite value {v:?}")));
            }
            row.push(x);
        }
        if !term_seen.insert(term.clone()) {
            warn!("line {line_no}: {label:?} normalizes to {term}, which is already present; skipped");
            continue;
        }
        vocab.push(term);
        flat.extend(row);
    }
    if let Some((n, _)) = header {
        if n != raw_seen.len() {
            warn!("header announces {n} rows but the file has {}", raw_seen.len());
        }
    }
    let d = dim.unwrap_or(0);
    let data = Array2::from_shape_vec((vocab.len(), d), flat).expect("row widths checked");
    EmbeddingMatrix::new(vocab, data)
}

pub fn load_embeddings(path: &Path, language: &str) -> Result<EmbeddingMatrix> {
    read_embeddings(open(path)?, language).map_err(|e| e.in_file(path))
}

/// Formats to 6 decimals, printing negative zero as zero.
fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn write_embeddings<W: Write>(mut out: W, emb: &EmbeddingMatrix, header: bool) -> Result<()> {
    if header {
        writeln!(out, "{} {}", emb.len(), emb.dim())?;
    }
    let mut line = String::new();
    for (i, term) in emb.vocab().iter().enumerate() {
        line.clear();
        line.push_str(term.as_str());
        for &x in emb.row(i) {
            line.push(' ');
            line.push_str(&fmt6(x));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_embeddings(path: &Path, emb: &EmbeddingMatrix, header: bool) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    write_embeddings(BufWriter::new(file), emb, header).map_err(|e| e.in_file(path))
}

pub fn load_graph(path: &Path, opts: &LoadOptions) -> Result<(KnowledgeGraph, LoadReport)> {
    load_assertions_with(open(path)?, opts).map_err(|e| e.in_file(path))
}

/// Loads a graph dump or any other URI-format assertion file.
pub fn load_graph_dump(path: &Path) -> Result<KnowledgeGraph> {
    let opts = LoadOptions {
        format: AssertionFormat::TsvUri,
        ..LoadOptions::default()
    };
    load_graph(path, &opts).map(|(g, _)| g)
}

pub fn save_graph_dump(path: &Path, g: &KnowledgeGraph) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    let mut out = BufWriter::new(file);
    g.write_dump(&mut out)
        .and_then(|_| out.flush().map_err(Error::from))
        .map_err(|e| e.in_file(path))
}
