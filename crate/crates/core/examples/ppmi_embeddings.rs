//! Graph-only embeddings: prune, PPMI, truncated SVD, re-expand.

use std::path::Path;

use graphvec::io::load_graph_dump;
use graphvec::pipeline::neighbors;
use graphvec::ppmi::{build_ppmi, prune_graph, ppmi_embeddings, PpmiConfig};

fn main() -> graphvec::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy/assertions.tsv");
    let g = load_graph_dump(&path)?;
    let cfg = PpmiConfig {
        k: 20,
        ..PpmiConfig::default()
    };

    let (kept, pruned) = prune_graph(&g, cfg.prune_min_degree);
    let ppmi = build_ppmi(&kept, &cfg)?;
    println!(
        "{} of {} nodes survive pruning; PPMI has {} nonzeros",
        kept.num_nodes(),
        g.num_nodes(),
        ppmi.nnz()
    );
    println!("pruned: {:?}", pruned.iter().map(|t| t.as_str()).collect::<Vec<_>>());

    let out = ppmi_embeddings(&g, &cfg)?;
    let emb = &out.embeddings;
    println!("\n{} rows x {} dims", emb.len(), emb.dim());
    for query in ["dog", "hammer", "apple"] {
        let near: Vec<String> = neighbors(emb, query, 4, "en")?
            .into_iter()
            .map(|(t, s)| format!("{t} {s:.2}"))
            .collect();
        println!("{query:>8}: {}", near.join(", "));
    }
    Ok(())
}
