//! Term URIs of the form `/c/<lang>/<text>[/<sense>]` and the text
//! normalization that produces them.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

const PREFIX: &str = "/c/";

/// Canonical identifier of a graph node and of an embedding row.
///
/// The serialized form is stored once; equality, hashing and ordering all
/// use it, so sorting by `TermUri` is sorting by URI string.
#[derive(Clone)]
pub struct TermUri {
    uri: String,
    lang_end: usize,
    text_end: usize,
}

impl TermUri {
    /// Builds a URI from already-normalized parts.
    pub fn new(language: &str, text: &str, sense: Option<&str>) -> Result<Self> {
        validate_language(language)?;
        validate_segment(text, "empty or invalid text")?;
        if let Some(s) = sense {
            validate_segment(s, "empty or invalid sense")?;
        }
        let mut uri = String::with_capacity(PREFIX.len() + language.len() + text.len() + 8);
        uri.push_str(PREFIX);
        uri.push_str(language);
        let lang_end = uri.len();
        uri.push('/');
        uri.push_str(text);
        let text_end = uri.len();
        if let Some(s) = sense {
            uri.push('/');
            uri.push_str(s);
        }
        Ok(TermUri {
            uri,
            lang_end,
            text_end,
        })
    }

    /// Parses a serialized URI such as `/c/en/lead/n`.
    pub fn parse(uri: &str) -> Result<Self> {
        let malformed = |reason| Error::MalformedUri {
            uri: uri.to_owned(),
            reason,
        };
        let rest = uri.strip_prefix(PREFIX).ok_or_else(|| malformed("missing /c/ prefix"))?;
        let parts: Vec<&str> = rest.split('/').collect();
        let (language, text, sense) = match parts.as_slice() {
            [l, t] => (*l, *t, None),
            [l, t, s] => (*l, *t, Some(*s)),
            [_] => return Err(malformed("missing text segment")),
            _ => return Err(malformed("too many segments")),
        };
        if language.is_empty() || text.is_empty() || sense.is_some_and(str::is_empty) {
            return Err(malformed("empty component"));
        }
        if !is_valid_language(language) {
            return Err(malformed("invalid language code"));
        }
        if !is_valid_segment(text) || !sense.is_none_or(is_valid_segment) {
            return Err(malformed("whitespace in component"));
        }
        Self::new(language, text, sense)
    }

    pub fn language(&self) -> &str {
        &self.uri[PREFIX.len()..self.lang_end]
    }

    pub fn text(&self) -> &str {
        &self.uri[self.lang_end + 1..self.text_end]
    }

    pub fn sense(&self) -> Option<&str> {
        (self.text_end < self.uri.len()).then(|| &self.uri[self.text_end + 1..])
    }

    pub fn as_str(&self) -> &str {
        &self.uri
    }

    /// The same term without its sense suffix.
    pub fn without_sense(&self) -> TermUri {
        TermUri {
            uri: self.uri[..self.text_end].to_owned(),
            lang_end: self.lang_end,
            text_end: self.text_end,
        }
    }
}

impl PartialEq for TermUri {
    fn eq(&self, other: &Self) -> bool {
        self.uri == other.uri
    }
}

impl Eq for TermUri {}

impl Hash for TermUri {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.uri.hash(state)
    }
}

impl PartialOrd for TermUri {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TermUri {
    fn cmp(&self, other: &Self) -> Ordering {
        self.uri.cmp(&other.uri)
    }
}

impl Borrow<str> for TermUri {
    fn borrow(&self) -> &str {
        &self.uri
    }
}

impl fmt::Display for TermUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.uri)
    }
}

impl fmt::Debug for TermUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TermUri({})", self.uri)
    }
}

impl FromStr for TermUri {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TermUri::parse(s)
    }
}

/// Splits text into normalized tokens: NFKC, lowercase, Unicode word
/// segmentation, punctuation-only tokens dropped.
///
/// Joining the tokens with `_` and tokenizing again is a fixed point. A
/// combining mark right after an underscore can change segmentation, so
/// the join-and-split step is repeated until it stops changing anything.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = tokenize_once(text);
    for _ in 0..8 {
        let again = tokenize_once(&tokens.join("_"));
        if again == tokens {
            break;
        }
        tokens = again;
    }
    tokens
}

fn tokenize_once(text: &str) -> Vec<String> {
    let folded: String = text.nfkc().collect::<String>().to_lowercase();
    let folded: String = folded.nfkc().collect();
    folded
        .unicode_words()
        .flat_map(|w| w.split('_'))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Normalizes raw text in the given language into a term URI.
pub fn normalize_term(raw_text: &str, language: &str) -> Result<TermUri> {
    let language = language.trim().to_ascii_lowercase();
    validate_language(&language)?;
    let tokens = tokenize(raw_text);
    if tokens.is_empty() {
        return Err(Error::EmptyAfterNormalization(raw_text.to_owned()));
    }
    TermUri::new(&language, &tokens.join("_"), None)
}

/// Accepts lowercase BCP-47-like tags made of letters and hyphens:
/// a 2–8 letter primary subtag followed by optional 1–8 letter subtags.
pub fn is_valid_language(code: &str) -> bool {
    let mut parts = code.split('-');
    let primary = parts.next().unwrap_or("");
    let letters = |s: &str, min: usize| {
        (min..=8).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_lowercase())
    };
    letters(primary, 2) && parts.all(|p| letters(p, 1))
}

fn validate_language(code: &str) -> Result<()> {
    if is_valid_language(code) {
        Ok(())
    } else {
        Err(Error::InvalidLanguage(code.to_owned()))
    }
}

fn is_valid_segment(s: &str) -> bool {
    !s.is_empty() && !s.contains('/') && !s.chars().any(char::is_whitespace)
}

fn validate_segment(s: &str, reason: &'static str) -> Result<()> {
    if is_valid_segment(s) {
        Ok(())
    } else {
        Err(Error::MalformedUri {
            uri: s.to_owned(),
            reason,
        })
    }
}
