//! Term normalization, the relation vocabulary, and an in-memory weighted
//! graph built from assertion files.
//!
//! Two line formats are accepted (see [`AssertionFormat`]). Whatever the
//! input, the loaded graph has:
//!
//! * symmetric relations stored with `start <= end` by URI,
//! * duplicate `(relation, start, end)` assertions merged by summing weights,
//! * an implicit `SenseOf` edge of weight 1 from every sense-tagged node
//!   (`/c/en/lead/n`) to its base term (`/c/en/lead`),
//! * nodes numbered in URI order, so ids do not depend on line order.

mod relation;
mod term;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use log::warn;

pub use relation::Relation;
pub use term::{is_valid_language, normalize_term, tokenize, TermUri};

use crate::error::{Error, Result};

/// A weighted, relation-labeled edge between two terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Assertion {
    pub relation: Relation,
    pub start: TermUri,
    pub end: TermUri,
    pub weight: f64,
}

impl Assertion {
    /// Validates the weight and canonicalizes endpoint order for symmetric
    /// relations.
    pub fn new(relation: Relation, start: TermUri, end: TermUri, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "assertion weight must be positive and finite, got {weight}"
            )));
        }
        let (start, end) = if relation.is_symmetric() && end < start {
            (end, start)
        } else {
            (start, end)
        };
        Ok(Assertion {
            relation,
            start,
            end,
            weight,
        })
    }

    fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.relation,
            self.start,
            self.end,
            format_sig6(self.weight)
        )
    }
}

/// Input line layout for [`load_assertions`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssertionFormat {
    /// `relation-uri  start-uri  end-uri  weight`
    TsvUri,
    /// `relation-name  start-lang  start-text  end-lang  end-text  weight`,
    /// with both texts normalized on load.
    TsvRaw,
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub format: AssertionFormat,
    /// Skip (and count) lines with unknown relations instead of failing.
    pub lax: bool,
    /// Add the implicit `SenseOf` edges for sense-tagged nodes.
    pub link_senses: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            format: AssertionFormat::TsvUri,
            lax: false,
            link_senses: true,
        }
    }
}

/// Counts gathered while loading an assertion file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines: usize,
    pub assertions: usize,
    pub skipped_unknown_relation: usize,
    pub skipped_external: usize,
    pub senses_linked: usize,
}

/// Immutable weighted term graph.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    nodes: Vec<TermUri>,
    index: HashMap<TermUri, usize>,
    edges: Vec<Assertion>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl KnowledgeGraph {
    /// Builds a graph from explicit nodes plus the endpoints of `assertions`.
    /// Duplicate `(relation, start, end)` triples are merged by summing.
    pub fn from_parts(
        nodes: impl IntoIterator<Item = TermUri>,
        assertions: impl IntoIterator<Item = Assertion>,
    ) -> Self {
        let mut merged: BTreeMap<(Relation, TermUri, TermUri), f64> = BTreeMap::new();
        for a in assertions {
            *merged.entry((a.relation, a.start, a.end)).or_insert(0.0) += a.weight;
        }
        Self::from_merged(nodes.into_iter().collect(), merged)
    }

    fn from_merged(
        mut node_set: BTreeSet<TermUri>,
        merged: BTreeMap<(Relation, TermUri, TermUri), f64>,
    ) -> Self {
        for (_, s, e) in merged.keys() {
            node_set.insert(s.clone());
            node_set.insert(e.clone());
        }
        let nodes: Vec<TermUri> = node_set.into_iter().collect();
        let index: HashMap<TermUri, usize> =
            nodes.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();

        let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); nodes.len()];
        let edges: Vec<Assertion> = merged
            .into_iter()
            .map(|((relation, start, end), weight)| {
                let i = index[&start];
                let j = index[&end];
                *acc[i].entry(j).or_insert(0.0) += weight;
                if i != j {
                    *acc[j].entry(i).or_insert(0.0) += weight;
                }
                Assertion {
                    relation,
                    start,
                    end,
                    weight,
                }
            })
            .collect();
        let adjacency = acc.into_iter().map(|m| m.into_iter().collect()).collect();

        KnowledgeGraph {
            nodes,
            index,
            edges,
            adjacency,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in URI order; the position is the node id.
    pub fn nodes(&self) -> &[TermUri] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TermUri {
        &self.nodes[id]
    }

    pub fn node_id(&self, term: &TermUri) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn node_id_str(&self, uri: &str) -> Option<usize> {
        self.index.get(uri).copied()
    }

    /// Merged assertions, sorted by (relation, start, end).
    pub fn edges(&self) -> &[Assertion] {
        &self.edges
    }

    /// `(neighbor id, summed weight)` pairs sorted by neighbor id. A
    /// self-loop appears once, as the node itself.
    pub fn neighbors(&self, id: usize) -> &[(usize, f64)] {
        &self.adjacency[id]
    }

    /// Summed weight of all assertions between `i` and `j`, either direction.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let row = &self.adjacency[i];
        row.binary_search_by_key(&j, |&(n, _)| n)
            .map(|pos| row[pos].1)
            .unwrap_or(0.0)
    }

    /// Number of distinct neighbors of a node; a self-loop counts once.
    pub fn degree(&self, node: &TermUri) -> Result<usize> {
        self.node_id(node)
            .map(|id| self.adjacency[id].len())
            .ok_or_else(|| Error::UnknownNode(node.to_string()))
    }

    pub fn degree_of(&self, id: usize) -> usize {
        self.adjacency[id].len()
    }

    /// The subgraph induced by the nodes with `keep[id] == true`.
    pub fn induced(&self, keep: &[bool]) -> KnowledgeGraph {
        assert_eq!(keep.len(), self.nodes.len());
        let nodes = self
            .nodes
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(t, _)| t.clone());
        let edges = self
            .edges
            .iter()
            .filter(|a| keep[self.index[&a.start]] && keep[self.index[&a.end]])
            .cloned();
        KnowledgeGraph::from_parts(nodes, edges)
    }

    /// Writes the graph as sorted tab-separated URI lines with weights
    /// printed to 6 significant digits.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        let mut lines: Vec<String> = self.edges.iter().map(Assertion::to_line).collect();
        lines.sort_unstable();
        for line in lines {
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Loads a graph in the given format with strict relation checking.
pub fn load_assertions<R: BufRead>(reader: R, format: AssertionFormat) -> Result<KnowledgeGraph> {
    let opts = LoadOptions {
        format,
        ..LoadOptions::default()
    };
    load_assertions_with(reader, &opts).map(|(g, _)| g)
}

pub fn load_assertions_with<R: BufRead>(
    reader: R,
    opts: &LoadOptions,
) -> Result<(KnowledgeGraph, LoadReport)> {
    let mut report = LoadReport::default();
    let mut merged: BTreeMap<(Relation, TermUri, TermUri), f64> = BTreeMap::new();

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        report.lines += 1;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_line(line, line_no, opts.format)? {
            Parsed::Assertion(a) => {
                report.assertions += 1;
                *merged.entry((a.relation, a.start, a.end)).or_insert(0.0) += a.weight;
            }
            Parsed::UnknownRelation(relation) => {
                if opts.lax {
                    warn!("line {line_no}: skipping unknown relation {relation:?}");
                    report.skipped_unknown_relation += 1;
                } else {
                    return Err(Error::UnknownRelation {
                        line: line_no,
                        relation,
                    });
                }
            }
            Parsed::External => report.skipped_external += 1,
        }
    }

    if opts.link_senses {
        let senses: BTreeSet<TermUri> = merged
            .keys()
            .flat_map(|(_, s, e)| [s, e])
            .filter(|t| t.sense().is_some())
            .cloned()
            .collect();
        for sense in senses {
            let base = sense.without_sense();
            merged
                .entry((Relation::SenseOf, sense, base))
                .or_insert_with(|| {
                    report.senses_linked += 1;
                    1.0
                });
        }
    }

    Ok((KnowledgeGraph::from_merged(BTreeSet::new(), merged), report))
}

enum Parsed {
    Assertion(Assertion),
    UnknownRelation(String),
    External,
}

fn parse_line(line: &str, line_no: usize, format: AssertionFormat) -> Result<Parsed> {
    let cols: Vec<&str> = line.split('\t').collect();
    let expected = match format {
        AssertionFormat::TsvUri => 4,
        AssertionFormat::TsvRaw => 6,
    };
    if cols.len() != expected {
        return Err(Error::parse(
            line_no,
            format!("expected {expected} tab-separated columns, found {}", cols.len()),
        ));
    }
    let rel_text = cols[0].trim();
    let relation = match format {
        AssertionFormat::TsvUri => {
            if !rel_text.starts_with("/r/") {
                return Err(Error::parse(line_no, format!("bad relation URI {rel_text:?}")));
            }
            Relation::parse(rel_text)
        }
        AssertionFormat::TsvRaw => Relation::from_name(rel_text),
    };
    let Some(relation) = relation else {
        return Ok(Parsed::UnknownRelation(rel_text.to_owned()));
    };

    let weight_text = cols[expected - 1].trim();
    let weight: f64 = weight_text
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad weight {weight_text:?}")))?;
    if !(weight.is_finite() && weight > 0.0) {
        return Err(Error::parse(line_no, format!("weight must be positive, got {weight}")));
    }

    let (start, end) = match format {
        AssertionFormat::TsvUri => {
            let (s, e) = (cols[1].trim(), cols[2].trim());
            if relation == Relation::ExternalURL && !(s.starts_with("/c/") && e.starts_with("/c/")) {
                return Ok(Parsed::External);
            }
            let term = |u: &str| TermUri::parse(u).map_err(|err| Error::parse(line_no, err.to_string()));
            (term(s)?, term(e)?)
        }
        AssertionFormat::TsvRaw => {
            if relation == Relation::ExternalURL {
                return Ok(Parsed::External);
            }
            let term = |lang: &str, text: &str| {
                normalize_term(text, lang).map_err(|err| Error::parse(line_no, err.to_string()))
            };
            (term(cols[1], cols[2])?, term(cols[3], cols[4])?)
        }
    };
    Assertion::new(relation, start, end, weight).map(Parsed::Assertion)
}

/// Formats a float with 6 significant digits, `%g` style: trailing zeros
/// removed, exponent notation outside `1e-4 <= |x| < 1e6`.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa.to_owned()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}
