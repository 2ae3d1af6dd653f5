use std::io::Read;

use super::stats::binomial_ci;
use crate::error::{Error, Result};
use crate::graph::{tokenize, TermUri};
use crate::linalg::{cosine, EmbeddingMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct ClozeStory {
    pub id: String,
    pub context: [String; 4],
    pub endings: [String; 2],
    /// 1 or 2.
    pub correct: u8,
}

/// Reads the comma-separated story file: a header row, then story id, four
/// context sentences, two candidate endings and the right ending (1 or 2).
pub fn load_cloze<R: Read>(reader: R) -> Result<Vec<ClozeStory>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        // the header is line 1
        let fallback_line = idx + 2;
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(fallback_line);
            Error::parse(line, e.to_string())
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(fallback_line);
        if record.len() != 8 {
            return Err(Error::parse(
                line,
                format!("expected 8 comma-separated fields, found {}", record.len()),
            ));
        }
        let field = |i: usize| -> Result<String> {
            let v = record[i].trim();
            if v.is_empty() {
                return Err(Error::parse(line, format!("field {} is empty", i + 1)));
            }
            Ok(v.to_string())
        };
        let correct = match record[7].trim() {
            "1" => 1,
            "2" => 2,
            other => {
                return Err(Error::parse(
                    line,
                    format!("right ending must be 1 or 2, found {other:?}"),
                ))
            }
        };
        out.push(ClozeStory {
            id: field(0)?,
            context: [field(1)?, field(2)?, field(3)?, field(4)?],
            endings: [field(5)?, field(6)?],
            correct,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ClozeOptions {
    pub language: String,
    /// Count unknown tokens as zero vectors in the averages.
    pub include_oov: bool,
}

impl Default for ClozeOptions {
    fn default() -> Self {
        ClozeOptions {
            language: "en".into(),
            include_oov: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClozeResult {
    pub accuracy: f64,
    pub correct: usize,
    pub n: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Chosen ending (1 or 2) per story.
    pub picks: Vec<u8>,
    pub oov_tokens: usize,
}

/// Mean of the token vectors of `sentences`. Tokens are looked up one by
/// one as single-word terms.
fn bag_of_vectors<'a>(
    emb: &EmbeddingMatrix,
    sentences: impl IntoIterator<Item = &'a String>,
    opts: &ClozeOptions,
    oov: &mut usize,
) -> Vec<f64> {
    let mut acc = vec![0.0; emb.dim()];
    let mut count = 0usize;
    for s in sentences {
        for tok in tokenize(s) {
            let row = TermUri::new(&opts.language, &tok, None)
                .ok()
                .and_then(|t| emb.get(&t));
            match row {
                Some(v) => {
                    acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
                    count += 1;
                }
                None => {
                    *oov += 1;
                    if opts.include_oov {
                        count += 1;
                    }
                }
            }
        }
    }
    if count > 0 {
        acc.iter_mut().for_each(|a| *a /= count as f64);
    }
    acc
}

pub fn eval_cloze(emb: &EmbeddingMatrix, stories: &[ClozeStory]) -> Result<ClozeResult> {
    eval_cloze_with(emb, stories, &ClozeOptions::default())
}

/// Picks the ending whose mean vector has the higher cosine with the mean
/// vector of the context; ties go to ending 1.
pub fn eval_cloze_with(
    emb: &EmbeddingMatrix,
    stories: &[ClozeStory],
    opts: &ClozeOptions,
) -> Result<ClozeResult> {
    if stories.is_empty() {
        return Err(Error::TooFewSamples("no cloze stories".into()));
    }
    let mut picks = Vec::with_capacity(stories.len());
    let mut correct = 0;
    let mut oov_tokens = 0;
    for story in stories {
        let context = bag_of_vectors(emb, &story.context, opts, &mut oov_tokens);
        let e1 = bag_of_vectors(emb, [&story.endings[0]], opts, &mut oov_tokens);
        let e2 = bag_of_vectors(emb, [&story.endings[1]], opts, &mut oov_tokens);
        let pick = if cosine(&context, &e2)? > cosine(&context, &e1)? { 2 } else { 1 };
        correct += usize::from(pick == story.correct);
        picks.push(pick);
    }
    let n = stories.len();
    let (ci_low, ci_high) = binomial_ci(correct, n)?;
    Ok(ClozeResult {
        accuracy: correct as f64 / n as f64,
        correct,
        n,
        ci_low,
        ci_high,
        picks,
        oov_tokens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb() -> EmbeddingMatrix {
        let rows = [
            ("dog", [1.0, 0.0, 0.0]),
            ("barked", [0.8, 0.6, 0.0]),
            ("cat", [0.6, 0.8, 0.0]),
            ("rain", [0.0, 0.0, 1.0]),
            ("umbrella", [0.0, 0.6, 0.8]),
        ];
        EmbeddingMatrix::from_rows(
            rows.iter()
                .map(|(w, v)| (TermUri::parse(&format!("/c/en/{w}")).unwrap(), v.to_vec())),
        )
        .unwrap()
    }

    fn story(context: [&str; 4], endings: [&str; 2], correct: u8) -> ClozeStory {
        ClozeStory {
            id: "s".into(),
            context: context.map(String::from),
            endings: endings.map(String::from),
            correct,
        }
    }

    #[test]
    fn repeated_sentence_beats_unknown_words() {
        let s = story(
            ["The dog barked.", "A cat.", "Rain.", "Dog!"],
            ["The dog barked.", "Qwerty zxcv."],
            1,
        );
        let r = eval_cloze(&emb(), &[s]).unwrap();
        assert_eq!(r.picks, [1]);
        assert_eq!(r.correct, 1);
    }

    #[test]
    fn unknown_endings_tie_to_first() {
        let s = story(["dog", "cat", "rain", "dog"], ["qqq", "zzz"], 2);
        let r = eval_cloze(&emb(), &[s]).unwrap();
        assert_eq!(r.picks, [1]);
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(r.oov_tokens, 2);
    }

    #[test]
    fn oov_flag_changes_only_the_denominator() {
        let e = emb();
        let mut oov = 0;
        let with = bag_of_vectors(&e, [&"dog qqq".to_string()], &ClozeOptions::default(), &mut oov);
        let opts = ClozeOptions {
            include_oov: false,
            ..ClozeOptions::default()
        };
        let without = bag_of_vectors(&e, [&"dog qqq".to_string()], &opts, &mut oov);
        assert_eq!(with, vec![0.5, 0.0, 0.0]);
        assert_eq!(without, vec![1.0, 0.0, 0.0]);
        assert_eq!(oov, 2);
    }

    #[test]
    fn picks_closer_ending() {
        let s = story(
            ["It started to rain.", "Rain fell.", "More rain.", "Rain again."],
            ["The dog barked.", "She opened her umbrella."],
            2,
        );
        assert_eq!(eval_cloze(&emb(), &[s]).unwrap().picks, [2]);
    }

    #[test]
    fn csv_loader() {
        let text = "InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,\
                    RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2,AnswerRightEnding\n\
                    id1,\"One, two.\",B.,C.,D.,E1.,E2.,2\n";
        let stories = load_cloze(text.as_bytes()).unwrap();
        assert_eq!(stories.len(), 1);
        assert_eq!(stories[0].context[0], "One, two.");
        assert_eq!(stories[0].correct, 2);

        let bad = "h1,h2,h3,h4,h5,h6,h7,h8\nid,a,b,c,d,e,f,3\n";
        assert!(matches!(load_cloze(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let short = "h1,h2,h3,h4,h5,h6,h7,h8\nid,a,b\n";
        assert!(matches!(load_cloze(short.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
