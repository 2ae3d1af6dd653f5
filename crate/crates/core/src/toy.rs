//! A small synthetic corpus for demos and end-to-end tests.
//!
//! Ten themes of ten English words hang off one hub concept each
//! (`/c/en/dog` IsA `/c/en/animal`) and are densely related inside the
//! theme, with a few cross-theme edges, sense-tagged nodes and Spanish
//! synonyms on top. The distributional embeddings place each word at its
//! theme centroid plus heavy noise, and leave some words out entirely, so
//! the graph carries information the vectors lack. Relatedness gold scores
//! come from hop distance in the graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::eval::{AnalogyQuestion, ClozeStory};
use crate::graph::{format_sig6, Assertion, KnowledgeGraph, Relation, TermUri};
use crate::io::write_embeddings;
use crate::linalg::{unit_normalize_rows, EmbeddingMatrix};

pub const THEMES: [(&str, [&str; 10]); 10] = [
    ("animal", ["dog", "cat", "horse", "cow", "sheep", "wolf", "lion", "tiger", "rabbit", "mouse"]),
    ("food", ["bread", "cheese", "apple", "banana", "rice", "soup", "cake", "butter", "milk", "honey"]),
    ("weather", ["rain", "snow", "wind", "storm", "cloud", "sun", "fog", "thunder", "ice", "hail"]),
    ("music", ["guitar", "piano", "violin", "drum", "song", "melody", "singer", "band", "flute", "concert"]),
    ("vehicle", ["car", "truck", "bus", "train", "bicycle", "plane", "boat", "ship", "motorcycle", "taxi"]),
    ("body", ["hand", "foot", "arm", "leg", "head", "eye", "ear", "nose", "mouth", "finger"]),
    ("tool", ["hammer", "saw", "drill", "wrench", "screwdriver", "nail", "screw", "axe", "chisel", "shovel"]),
    ("color", ["red", "blue", "green", "yellow", "purple", "pink", "brown", "black", "white", "gray"]),
    ("furniture", ["chair", "table", "sofa", "bed", "desk", "shelf", "lamp", "cabinet", "stool", "couch"]),
    ("emotion", ["happy", "sad", "angry", "joy", "fear", "love", "anger", "calm", "sorrow", "grief"]),
];

/// Words present only in the distributional embeddings.
pub const FUNCTION_WORDS: [&str; 12] = [
    "the", "a", "was", "found", "near", "and", "then", "it", "they", "with", "of", "had",
];

const SPANISH: [(&str, &str); 6] = [
    ("perro", "dog"),
    ("gato", "cat"),
    ("lluvia", "rain"),
    ("pan", "bread"),
    ("coche", "car"),
    ("mano", "hand"),
];

const SENSES: [(&str, &str, &str); 3] = [
    ("saw", "v", "cut"),
    ("nail", "n", "finger"),
    ("ice", "n", "cold"),
];

#[derive(Clone, Debug)]
pub struct ToyConfig {
    pub seed: u64,
    pub dims: usize,
    /// Standard deviation of the per-coordinate noise, relative to a unit
    /// centroid spread over `dims` coordinates.
    pub noise: f64,
    /// Fraction of theme words missing from each embedding source.
    pub missing: f64,
    pub relatedness_pairs: usize,
    pub analogy_questions: usize,
    pub cloze_stories: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            seed: 7,
            dims: 25,
            noise: 1.4,
            missing: 0.15,
            relatedness_pairs: 160,
            analogy_questions: 24,
            cloze_stories: 30,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ToyCorpus {
    pub assertions: Vec<Assertion>,
    pub graph: KnowledgeGraph,
    pub embeddings: EmbeddingMatrix,
    /// A second, independently noised source in a permuted basis.
    pub embeddings_alt: EmbeddingMatrix,
    pub relatedness: Vec<(String, String, f64)>,
    pub analogies: Vec<AnalogyQuestion>,
    pub cloze: Vec<ClozeStory>,
}

fn en(text: &str) -> TermUri {
    TermUri::new("en", text, None).expect("valid toy term")
}

impl ToyCorpus {
    pub fn generate(cfg: &ToyConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let assertions = build_assertions(&mut rng);
        let graph = KnowledgeGraph::from_parts([], assertions.iter().cloned());

        let centroids: Vec<Vec<f64>> = (0..THEMES.len())
            .map(|_| unit_gaussian(cfg.dims, &mut rng))
            .collect();
        let embeddings = noisy_embeddings(cfg, &centroids, None, &mut rng);
        let mut perm: Vec<usize> = (0..cfg.dims).collect();
        perm.shuffle(&mut rng);
        let embeddings_alt = noisy_embeddings(cfg, &centroids, Some(&perm), &mut rng);

        let relatedness = relatedness_pairs(cfg, &graph, &mut rng);
        let analogies = analogy_questions(cfg, &mut rng);
        let cloze = cloze_stories(cfg, &mut rng);
        ToyCorpus {
            assertions,
            graph,
            embeddings,
            embeddings_alt,
            relatedness,
            analogies,
            cloze,
        }
    }

    /// Writes `assertions.tsv`, `embeddings.txt`, `embeddings_alt.txt`,
    /// `relatedness.txt`, `analogies.tsv` and `cloze.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(File::create(dir.join("assertions.tsv"))?);
        for a in &self.assertions {
            writeln!(out, "{}\t{}\t{}\t{}", a.relation, a.start, a.end, format_sig6(a.weight))?;
        }
        writeln!(out, "/r/ExternalURL\t/c/en/dog\thttp://example.org/dog\t1")?;
        out.flush()?;

        for (name, emb) in [("embeddings.txt", &self.embeddings), ("embeddings_alt.txt", &self.embeddings_alt)] {
            let mut out = BufWriter::new(File::create(dir.join(name))?);
            // plain labels, as third-party files have them
            writeln!(out, "{} {}", emb.len(), emb.dim())?;
            let mut text = Vec::new();
            write_embeddings(&mut text, emb, false)?;
            for line in String::from_utf8(text).expect("utf-8").lines() {
                let (uri, rest) = line.split_once(' ').expect("label and values");
                let term = TermUri::parse(uri)?;
                writeln!(out, "{} {rest}", term.text())?;
            }
            out.flush()?;
        }

        let mut out = BufWriter::new(File::create(dir.join("relatedness.txt"))?);
        writeln!(out, "# word1 word2 score (10 / (1 + hop distance))")?;
        for (a, b, g) in &self.relatedness {
            writeln!(out, "{a}\t{b}\t{}", format_sig6(*g))?;
        }
        out.flush()?;

        let mut out = BufWriter::new(File::create(dir.join("analogies.tsv"))?);
        for q in &self.analogies {
            let choices: Vec<String> = q.choices.iter().map(|(a, b)| format!("{a}:{b}")).collect();
            let letter = (b'a' + q.answer as u8) as char;
            writeln!(out, "{}\t{}\t{}\t{letter}", q.stem.0, q.stem.1, choices.join("\t"))?;
        }
        out.flush()?;

        let mut w = csv::Writer::from_path(dir.join("cloze.csv")).map_err(csv_err)?;
        w.write_record([
            "InputStoryid",
            "InputSentence1",
            "InputSentence2",
            "InputSentence3",
            "InputSentence4",
            "RandomFifthSentenceQuiz1",
            "RandomFifthSentenceQuiz2",
            "AnswerRightEnding",
        ])
        .map_err(csv_err)?;
        for s in &self.cloze {
            let label = s.correct.to_string();
            let mut row: Vec<&str> = vec![&s.id];
            row.extend(s.context.iter().map(String::as_str));
            row.extend(s.endings.iter().map(String::as_str));
            row.push(&label);
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    std::io::Error::other(e).into()
}

fn unit_gaussian(dims: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..dims).map(|_| StandardNormal.sample(rng)).collect();
    let n = crate::linalg::norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

fn weight(rng: &mut ChaCha8Rng) -> f64 {
    // quarter steps keep the dump exact
    rng.random_range(2..=8) as f64 / 4.0
}

fn build_assertions(rng: &mut ChaCha8Rng) -> Vec<Assertion> {
    let mut out = Vec::new();
    let mut add = |rel: Relation, a: TermUri, b: TermUri, w: f64| {
        out.push(Assertion::new(rel, a, b, w).expect("positive toy weight"));
    };
    for (hub, words) in THEMES {
        for w in words {
            add(Relation::IsA, en(w), en(hub), 1.0);
        }
        for (i, a) in words.iter().enumerate() {
            let mut others: Vec<&&str> = words.iter().filter(|b| *b != a).collect();
            others.shuffle(rng);
            for b in others.into_iter().take(2 + i % 2) {
                add(Relation::RelatedTo, en(a), en(b), weight(rng));
            }
        }
    }
    for _ in 0..12 {
        let (_, t1) = THEMES.choose(rng).expect("themes");
        let (_, t2) = THEMES.choose(rng).expect("themes");
        let a = t1.choose(rng).expect("words");
        let b = t2.choose(rng).expect("words");
        if a != b {
            add(Relation::RelatedTo, en(a), en(b), 0.5);
        }
    }
    for (es, word) in SPANISH {
        add(Relation::Synonym, TermUri::new("es", es, None).expect("toy term"), en(word), 1.0);
    }
    for (word, sense, related) in SENSES {
        add(Relation::RelatedTo, TermUri::new("en", word, Some(sense)).expect("toy term"), en(related), 1.0);
    }
    add(Relation::Antonym, en("happy"), en("sad"), 2.0);
    add(Relation::Antonym, en("calm"), en("angry"), 2.0);
    add(Relation::UsedFor, en("hammer"), en("nail"), 2.0);
    add(Relation::MadeOf, en("cheese"), en("milk"), 1.5);
    out
}

fn noisy_embeddings(
    cfg: &ToyConfig,
    centroids: &[Vec<f64>],
    perm: Option<&[usize]>,
    rng: &mut ChaCha8Rng,
) -> EmbeddingMatrix {
    let scale = cfg.noise / (cfg.dims as f64).sqrt();
    let mut vocab = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (t, (_, words)) in THEMES.iter().enumerate() {
        for w in words {
            let noise: Vec<f64> = (0..cfg.dims)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    scale * z
                })
                .collect();
            if rng.random_bool(cfg.missing) {
                continue;
            }
            vocab.push(en(w));
            rows.push(centroids[t].iter().zip(&noise).map(|(c, n)| c + n).collect());
        }
    }
    for w in FUNCTION_WORDS {
        vocab.push(en(w));
        rows.push(unit_gaussian(cfg.dims, rng));
    }
    let mut data = Array2::from_shape_fn((rows.len(), cfg.dims), |(i, j)| match perm {
        Some(p) => rows[i][p[j]],
        None => rows[i][j],
    });
    unit_normalize_rows(&mut data);
    // the same word may not appear twice; sort for stable files
    let mut order: Vec<usize> = (0..vocab.len()).collect();
    order.sort_by(|&a, &b| vocab[a].cmp(&vocab[b]));
    let vocab: Vec<TermUri> = order.iter().map(|&i| vocab[i].clone()).collect();
    let data = data.select(ndarray::Axis(0), &order);
    EmbeddingMatrix::new(vocab, data).expect("distinct toy words")
}

/// Unweighted hop distances from `start`.
fn hops(g: &KnowledgeGraph, start: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.num_nodes()];
    dist[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        let d = dist[i].expect("visited");
        for &(j, _) in g.neighbors(i) {
            if dist[j].is_none() {
                dist[j] = Some(d + 1);
                queue.push_back(j);
            }
        }
    }
    dist
}

fn relatedness_pairs(cfg: &ToyConfig, g: &KnowledgeGraph, rng: &mut ChaCha8Rng) -> Vec<(String, String, f64)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut cache: HashMap<usize, Vec<Option<usize>>> = HashMap::new();
    while out.len() < cfg.relatedness_pairs {
        let t1 = rng.random_range(0..THEMES.len());
        let t2 = if rng.random_bool(0.5) { t1 } else { rng.random_range(0..THEMES.len()) };
        let a = *THEMES[t1].1.choose(rng).expect("words");
        let b = *THEMES[t2].1.choose(rng).expect("words");
        if a == b || !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        let ia = g.node_id(&en(a)).expect("theme word in graph");
        let ib = g.node_id(&en(b)).expect("theme word in graph");
        let dist = cache.entry(ia).or_insert_with(|| hops(g, ia))[ib];
        let gold = dist.map_or(0.0, |d| 10.0 / (1.0 + d as f64));
        out.push((a.to_string(), b.to_string(), gold));
    }
    out
}

fn analogy_questions(cfg: &ToyConfig, rng: &mut ChaCha8Rng) -> Vec<AnalogyQuestion> {
    let mut out = Vec::new();
    for q in 0..cfg.analogy_questions {
        let t = q % THEMES.len();
        let mut u = rng.random_range(0..THEMES.len() - 1);
        if u >= t {
            u += 1;
        }
        let (hub_t, words_t) = THEMES[t];
        let (hub_u, words_u) = THEMES[u];
        let pick = |ws: &[&str; 10], rng: &mut ChaCha8Rng| ws.choose(rng).expect("words").to_string();
        let stem = (pick(&words_t, rng), hub_t.to_string());
        let other = THEMES[(u + 1 + rng.random_range(0..THEMES.len() - 1)) % THEMES.len()];
        let correct = (pick(&words_u, rng), hub_u.to_string());
        let mut choices = vec![
            correct.clone(),
            (pick(&words_u, rng), other.0.to_string()),
            (hub_u.to_string(), pick(&words_u, rng)),
            (pick(&other.1, rng), pick(&words_u, rng)),
            (pick(&words_t, rng), pick(&other.1, rng)),
        ];
        choices.shuffle(rng);
        let answer = choices.iter().position(|c| *c == correct).expect("correct choice present");
        let choices: [(String, String); 5] = choices.try_into().expect("five choices");
        out.push(AnalogyQuestion {
            stem,
            choices,
            answer,
            line: q + 1,
        });
    }
    out
}

const TEMPLATES: [&str; 6] = [
    "They found the {} near the {}.",
    "The {} was with a {}.",
    "It had a {} and a {}.",
    "Then the {} found the {}.",
    "A {} was near a {}.",
    "They had the {} of the {}.",
];

fn sentence(rng: &mut ChaCha8Rng, words: &[&str; 10]) -> String {
    let template = TEMPLATES.choose(rng).expect("templates");
    let mut parts = template.split("{}");
    let mut s = parts.next().unwrap_or("").to_string();
    for rest in parts {
        s.push_str(words.choose(rng).expect("words"));
        s.push_str(rest);
    }
    s
}

fn cloze_stories(cfg: &ToyConfig, rng: &mut ChaCha8Rng) -> Vec<ClozeStory> {
    let mut out = Vec::new();
    for i in 0..cfg.cloze_stories {
        let t = i % THEMES.len();
        let mut u = rng.random_range(0..THEMES.len() - 1);
        if u >= t {
            u += 1;
        }
        let context = [(); 4].map(|_| sentence(rng, &THEMES[t].1));
        let right = sentence(rng, &THEMES[t].1);
        let wrong = sentence(rng, &THEMES[u].1);
        let correct = if rng.random_bool(0.5) { 1 } else { 2 };
        let endings = if correct == 1 { [right, wrong] } else { [wrong, right] };
        out.push(ClozeStory {
            id: format!("toy-{:03}", i + 1),
            context,
            endings,
            correct,
        });
    }
    out
}

/// Theme index of each theme word, for tests that need ground truth.
pub fn theme_index() -> BTreeMap<String, usize> {
    THEMES
        .iter()
        .enumerate()
        .flat_map(|(t, (_, ws))| ws.iter().map(move |w| (w.to_string(), t)))
        .collect()
}
