//! Nearest terms by cosine, including a sense-tagged query and a Spanish
//! term reached through the graph.
//!
//! ```text
//! cargo run --example nearest_neighbors -- dog cat /c/en/saw/v
//! ```

use std::path::Path;

use graphvec::io::{load_embeddings, load_graph_dump};
use graphvec::pipeline::neighbors;
use graphvec::retrofit::{build_problem, retrofit, RetrofitConfig};

fn main() -> graphvec::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let g = load_graph_dump(&dir.join("assertions.tsv"))?;
    let raw = load_embeddings(&dir.join("embeddings.txt"), "en")?;
    let emb = retrofit(&build_problem(&raw, &g)?, &RetrofitConfig::default())?;

    let mut queries: Vec<String> = std::env::args().skip(1).collect();
    if queries.is_empty() {
        queries = ["dog", "/c/en/saw/v", "/c/es/perro"].map(String::from).to_vec();
    }
    for q in &queries {
        match neighbors(&emb, q, 5, "en") {
            Ok(hits) => {
                println!("{q}");
                for (t, s) in hits {
                    println!("  {s:.3}  {t}");
                }
            }
            Err(e) => println!("{q}: {e}"),
        }
    }
    Ok(())
}
