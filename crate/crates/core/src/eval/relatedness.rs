use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use log::warn;

use super::lookup_row;
use super::stats::{fisher_ci, spearman};
use crate::error::{Error, Result};
use crate::linalg::{cosine, EmbeddingMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Dev,
    Test,
    All,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            "all" => Ok(Split::All),
            other => Err(Error::InvalidConfig(format!(
                "unknown split {other:?}; expected dev, test or all"
            ))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Dev => "dev",
            Split::Test => "test",
            Split::All => "all",
        })
    }
}

/// How a dataset is divided into dev and test pairs. Positions are the
/// 1-based order of data lines (comments and blank lines do not count).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitRule {
    /// Only `all` is defined.
    AllOnly,
    /// Every third line starting with the third is test; the rest is dev.
    EveryThird,
    /// The first `n` lines are dev; the rest is test.
    Prefix(usize),
}

impl SplitRule {
    /// The conventional rule for a dataset name: `rw*` uses every third
    /// line, `men*` a 2000-pair dev prefix, everything else is all-in-one.
    pub fn for_dataset(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        if lower.starts_with("rw") {
            SplitRule::EveryThird
        } else if lower.starts_with("men") {
            SplitRule::Prefix(2000)
        } else {
            SplitRule::AllOnly
        }
    }

    fn in_split(self, ordinal: usize, split: Split) -> bool {
        match (self, split) {
            (_, Split::All) => true,
            (SplitRule::EveryThird, Split::Test) => ordinal.is_multiple_of(3),
            (SplitRule::EveryThird, Split::Dev) => !ordinal.is_multiple_of(3),
            (SplitRule::Prefix(n), Split::Dev) => ordinal <= n,
            (SplitRule::Prefix(n), Split::Test) => ordinal > n,
            (SplitRule::AllOnly, _) => unreachable!("checked by the caller"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelatednessPair {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
    /// 1-based position among the data lines.
    pub ordinal: usize,
    /// 1-based physical line in the source file.
    pub line: usize,
}

#[derive(Clone, Debug)]
pub struct RelatednessDataset {
    pub name: String,
    pub language: String,
    pub pairs: Vec<RelatednessPair>,
    pub split_rule: SplitRule,
}

impl RelatednessDataset {
    /// Builds a dataset from `(word1, word2, gold)` triples, dropping
    /// repeated unordered pairs after the first.
    pub fn from_pairs(
        name: &str,
        language: &str,
        pairs: impl IntoIterator<Item = (String, String, f64)>,
    ) -> Result<Self> {
        let mut ds = RelatednessDataset {
            name: name.to_string(),
            language: language.to_string(),
            pairs: Vec::new(),
            split_rule: SplitRule::for_dataset(name),
        };
        let mut seen = HashSet::new();
        for (i, (w1, w2, gold)) in pairs.into_iter().enumerate() {
            ds.add(w1, w2, gold, i + 1, i + 1, &mut seen)?;
        }
        Ok(ds)
    }

    pub fn with_split_rule(mut self, rule: SplitRule) -> Self {
        self.split_rule = rule;
        self
    }

    fn add(
        &mut self,
        word1: String,
        word2: String,
        gold: f64,
        ordinal: usize,
        line: usize,
        seen: &mut HashSet<(String, String)>,
    ) -> Result<()> {
        if !gold.is_finite() {
            return Err(Error::parse(line, format!("gold score {gold} is not finite")));
        }
        let key = if word1 <= word2 {
            (word1.clone(), word2.clone())
        } else {
            (word2.clone(), word1.clone())
        };
        if !seen.insert(key) {
            warn!("{}: line {line}: repeated pair {word1} / {word2} ignored", self.name);
            return Ok(());
        }
        self.pairs.push(RelatednessPair {
            word1,
            word2,
            gold,
            ordinal,
            line,
        });
        Ok(())
    }

    /// Pairs belonging to `split`, in file order.
    pub fn select(&self, split: Split) -> Result<Vec<&RelatednessPair>> {
        if self.split_rule == SplitRule::AllOnly && split != Split::All {
            return Err(Error::UnknownSplit {
                dataset: self.name.clone(),
                split: split.to_string(),
            });
        }
        Ok(self
            .pairs
            .iter()
            .filter(|p| self.split_rule.in_split(p.ordinal, split))
            .collect())
    }
}

/// Reads `word1 word2 score` lines. Lines containing a tab are split on
/// tabs (so terms may contain spaces), others on whitespace. Extra columns
/// are ignored; blank lines and `#` comments are skipped.
pub fn load_relatedness<R: BufRead>(
    reader: R,
    name: &str,
    language: &str,
) -> Result<RelatednessDataset> {
    let mut ds = RelatednessDataset::from_pairs(name, language, [])?;
    let mut seen = HashSet::new();
    let mut ordinal = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if trimmed.contains('\t') {
            trimmed.split('\t').map(str::trim).collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        if fields.len() < 3 {
            return Err(Error::parse(
                line_no,
                format!("expected word1, word2 and a score, found {} fields", fields.len()),
            ));
        }
        let gold: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("score {:?} is not a number", fields[2])))?;
        ordinal += 1;
        ds.add(fields[0].into(), fields[1].into(), gold, ordinal, line_no, &mut seen)?;
    }
    Ok(ds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelatednessResult {
    pub rho: f64,
    pub n: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Pairs with at least one out-of-vocabulary word (scored 0).
    pub oov_count: usize,
    /// Model score of every evaluated pair, in split order.
    pub scores: Vec<f64>,
}

/// Cosine of the two looked-up vectors for every pair of the split, ranked
/// against gold. Unknown words give the zero vector and a score of 0.
pub fn eval_relatedness(
    emb: &EmbeddingMatrix,
    ds: &RelatednessDataset,
    split: Split,
) -> Result<RelatednessResult> {
    let pairs = ds.select(split)?;
    let mut scores = Vec::with_capacity(pairs.len());
    let mut gold = Vec::with_capacity(pairs.len());
    let mut oov_count = 0;
    for p in &pairs {
        let a = lookup_row(emb, &p.word1, &ds.language);
        let b = lookup_row(emb, &p.word2, &ds.language);
        let score = match (a, b) {
            (Some(a), Some(b)) => cosine(a, b)?,
            _ => {
                oov_count += 1;
                0.0
            }
        };
        scores.push(score);
        gold.push(p.gold);
    }
    let rho = match spearman(&scores, &gold) {
        Ok(r) => r,
        Err(Error::DegenerateInput(why)) => {
            warn!("{} ({split}): {why}; reporting ρ = 0", ds.name);
            0.0
        }
        Err(e) => return Err(e),
    };
    let n = pairs.len();
    let (ci_low, ci_high) = if rho.abs() >= 1.0 {
        (rho, rho)
    } else {
        fisher_ci(rho, n).unwrap_or((-1.0, 1.0))
    };
    Ok(RelatednessResult {
        rho,
        n,
        ci_low,
        ci_high,
        oov_count,
        scores,
    })
}
