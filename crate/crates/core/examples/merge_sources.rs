//! Aligns two independently retrofitted sources in one space.

use std::path::Path;

use graphvec::io::{load_embeddings, load_graph_dump};
use graphvec::linalg::cosine;
use graphvec::merge::MergePlan;
use graphvec::retrofit::{build_problem, retrofit, RetrofitConfig};

fn main() -> graphvec::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let g = load_graph_dump(&dir.join("assertions.tsv"))?;
    let cfg = RetrofitConfig::default();
    let first = load_embeddings(&dir.join("embeddings.txt"), "en")?;
    let second = load_embeddings(&dir.join("embeddings_alt.txt"), "en")?;
    // retrofit only the first so the sources cover different terms
    let first = retrofit(&build_problem(&first, &g)?, &cfg)?;

    let plan = MergePlan::new(&first, &second, 20, 0)?;
    let model = plan.fit(&first, &second)?;
    let merged = model.apply(&first, &second)?;
    println!(
        "{} + {} rows, {} shared, merged into {} rows x {} dims",
        first.len(),
        second.len(),
        plan.common_vocab.len(),
        merged.len(),
        merged.dim()
    );
    let s = model.singular_values();
    println!("leading singular values: {:.3?}", &s.as_slice().unwrap()[..5]);

    let candidates = ["dog", "cat", "horse", "lion", "hammer", "drill", "apple", "bread"];
    let words: Vec<&str> = candidates
        .into_iter()
        .filter(|w| second.get_str(&format!("/c/en/{w}")).is_some())
        .collect();
    for pair in words.windows(2).take(4) {
        let (x, y) = (format!("/c/en/{}", pair[0]), format!("/c/en/{}", pair[1]));
        let c = |m: &graphvec::linalg::EmbeddingMatrix| {
            cosine(m.get_str(&x).unwrap(), m.get_str(&y).unwrap()).unwrap()
        };
        println!(
            "{:>7} / {:<7} first {:.3}  second {:.3}  merged {:.3}",
            pair[0],
            pair[1],
            c(&first),
            c(&second),
            c(&merged)
        );
    }
    Ok(())
}
