//! Regenerates the bundled toy corpus.
//!
//! ```text
//! cargo run --example make_toy_corpus -- crates/core/data/toy
//! ```

use std::path::PathBuf;

use graphvec::toy::{ToyConfig, ToyCorpus};

fn main() -> graphvec::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/toy"));
    let corpus = ToyCorpus::generate(&ToyConfig::default());
    corpus.write_to(&dir)?;
    println!(
        "wrote {} assertions, {} + {} embedding rows, {} pairs, {} questions, {} stories to {}",
        corpus.assertions.len(),
        corpus.embeddings.len(),
        corpus.embeddings_alt.len(),
        corpus.relatedness.len(),
        corpus.analogies.len(),
        corpus.cloze.len(),
        dir.display()
    );
    Ok(())
}
