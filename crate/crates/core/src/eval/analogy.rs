use std::io::BufRead;

use log::debug;

use super::lookup_phrase;
use super::stats::binomial_ci;
use crate::error::{Error, Result};
use crate::linalg::EmbeddingMatrix;

/// Weights of the two difference terms of [`analogy_score`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AnalogyWeights {
    pub w1: f64,
    pub w2: f64,
}

impl AnalogyWeights {
    pub const fn new(w1: f64, w2: f64) -> Self {
        AnalogyWeights { w1, w2 }
    }
}

/// A multiple-choice question "a1 is to b1 as ? is to ?".
#[derive(Clone, Debug, PartialEq)]
pub struct AnalogyQuestion {
    pub stem: (String, String),
    pub choices: [(String, String); 5],
    /// 0-based index of the correct choice.
    pub answer: usize,
    pub line: usize,
}

fn split_pair(field: &str, line: usize) -> Result<(String, String)> {
    let (a, b) = field
        .split_once(':')
        .ok_or_else(|| Error::parse(line, format!("expected a word pair a:b, found {field:?}")))?;
    let (a, b) = (a.trim(), b.trim());
    if a.is_empty() || b.is_empty() {
        return Err(Error::parse(line, format!("empty word in pair {field:?}")));
    }
    Ok((a.to_string(), b.to_string()))
}

/// Reads tab-separated questions: `a1`, `b1`, five `a2:b2` choices and the
/// answer letter `a`–`e`. The stem may also be given as one `a1:b1` field.
/// Blank lines and `#` comments are skipped.
pub fn load_analogies<R: BufRead>(reader: R) -> Result<Vec<AnalogyQuestion>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
        let (stem, rest) = match fields.len() {
            8 => ((fields[0].to_string(), fields[1].to_string()), &fields[2..]),
            7 => (split_pair(fields[0], line_no)?, &fields[1..]),
            n => {
                return Err(Error::parse(
                    line_no,
                    format!("expected 8 tab-separated fields (or 7 with an a1:b1 stem), found {n}"),
                ))
            }
        };
        let mut choices: [(String, String); 5] = Default::default();
        for (slot, field) in choices.iter_mut().zip(&rest[..5]) {
            *slot = split_pair(field, line_no)?;
        }
        let answer = match rest[5].to_ascii_lowercase().as_str() {
            "a" => 0,
            "b" => 1,
            "c" => 2,
            "d" => 3,
            "e" => 4,
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("answer must be a letter a-e, found {other:?}"),
                ))
            }
        };
        out.push(AnalogyQuestion {
            stem,
            choices,
            answer,
            line: line_no,
        });
    }
    Ok(out)
}

/// `a1·a2 + b1·b2 + w1 (b2 − a2)·(b1 − a1) + w2 (b2 − b1)·(a2 − a1)`.
pub fn analogy_score(
    a1: &[f64],
    b1: &[f64],
    a2: &[f64],
    b2: &[f64],
    w: AnalogyWeights,
) -> Result<f64> {
    let d = a1.len();
    for v in [b1, a2, b2] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: v.len(),
            });
        }
    }
    let mut direct = 0.0;
    let mut offset = 0.0;
    let mut transpose = 0.0;
    for i in 0..d {
        direct += a1[i] * a2[i] + b1[i] * b2[i];
        offset += (b2[i] - a2[i]) * (b1[i] - a1[i]);
        transpose += (b2[i] - b1[i]) * (a2[i] - a1[i]);
    }
    Ok(direct + w.w1 * offset + w.w2 * transpose)
}

/// Looked-up vectors of one question.
struct QuestionVectors {
    a1: Vec<f64>,
    b1: Vec<f64>,
    choices: Vec<(Vec<f64>, Vec<f64>)>,
    oov: usize,
}

fn vectorize(emb: &EmbeddingMatrix, q: &AnalogyQuestion, language: &str) -> QuestionVectors {
    let mut oov = 0;
    let mut get = |raw: &str| {
        lookup_phrase(emb, raw, language).unwrap_or_else(|| {
            oov += 1;
            vec![0.0; emb.dim()]
        })
    };
    let a1 = get(&q.stem.0);
    let b1 = get(&q.stem.1);
    let choices = q.choices.iter().map(|(a, b)| (get(a), get(b))).collect();
    QuestionVectors { a1, b1, choices, oov }
}

/// Best choice; ties go to the lowest index.
fn pick(v: &QuestionVectors, w: AnalogyWeights) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, (a2, b2)) in v.choices.iter().enumerate() {
        let s = analogy_score(&v.a1, &v.b1, a2, b2, w).expect("lookups share the embedding width");
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalogyResult {
    pub accuracy: f64,
    pub correct: usize,
    pub n: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Chosen index per question.
    pub picks: Vec<usize>,
    /// Terms across all questions that had no vector.
    pub oov_terms: usize,
}

pub fn solve_analogies(
    emb: &EmbeddingMatrix,
    questions: &[AnalogyQuestion],
    w: AnalogyWeights,
    language: &str,
) -> Result<AnalogyResult> {
    if questions.is_empty() {
        return Err(Error::TooFewSamples("no analogy questions".into()));
    }
    let mut picks = Vec::with_capacity(questions.len());
    let mut correct = 0;
    let mut oov_terms = 0;
    for q in questions {
        let v = vectorize(emb, q, language);
        oov_terms += v.oov;
        let p = pick(&v, w);
        correct += usize::from(p == q.answer);
        picks.push(p);
    }
    let n = questions.len();
    let (ci_low, ci_high) = binomial_ci(correct, n)?;
    Ok(AnalogyResult {
        accuracy: correct as f64 / n as f64,
        correct,
        n,
        ci_low,
        ci_high,
        picks,
        oov_terms,
    })
}

/// `{0, 1/steps, 2/steps, …, 1}`.
pub fn grid_values(steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}

/// Picks the grid point with the best accuracy on the odd-numbered
/// questions (1st, 3rd, … in file order). Ties go to the lexicographically
/// smallest `(w1, w2)`.
pub fn grid_search_weights(
    emb: &EmbeddingMatrix,
    questions: &[AnalogyQuestion],
    language: &str,
    steps: usize,
) -> Result<AnalogyWeights> {
    if questions.len() < 2 {
        return Err(Error::TooFewSamples(format!(
            "grid search needs at least 2 questions, got {}",
            questions.len()
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("grid needs at least one step".into()));
    }
    let tuning: Vec<(QuestionVectors, usize)> = questions
        .iter()
        .step_by(2)
        .map(|q| (vectorize(emb, q, language), q.answer))
        .collect();
    let grid = grid_values(steps);
    let mut best = AnalogyWeights::default();
    let mut best_correct = None;
    for &w1 in &grid {
        for &w2 in &grid {
            let w = AnalogyWeights::new(w1, w2);
            let correct = tuning.iter().filter(|(v, answer)| pick(v, w) == *answer).count();
            if best_correct.is_none_or(|b| correct > b) {
                best = w;
                best_correct = Some(correct);
            }
        }
    }
    debug!(
        "grid search chose ({}, {}) with {}/{} tuning questions right",
        best.w1,
        best.w2,
        best_correct.unwrap_or(0),
        tuning.len()
    );
    Ok(best)
}
