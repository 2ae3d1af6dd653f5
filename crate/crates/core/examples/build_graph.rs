//! Loads the toy assertion file, then shows term normalization, degrees
//! and the canonical dump.

use std::path::Path;

use graphvec::graph::{normalize_term, LoadOptions};
use graphvec::io::load_graph;

fn main() -> graphvec::Result<()> {
    for (raw, lang) in [("United States", "en"), ("O alimento!", "pt"), ("Ice-Cream", "en")] {
        println!("{raw:?} ({lang}) -> {}", normalize_term(raw, lang)?);
    }

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy/assertions.tsv");
    let (g, report) = load_graph(&path, &LoadOptions::default())?;
    println!(
        "\n{} nodes, {} edges ({} external links skipped)",
        g.num_nodes(),
        g.num_edges(),
        report.skipped_external
    );

    let mut by_degree: Vec<usize> = (0..g.num_nodes()).collect();
    by_degree.sort_by_key(|&i| std::cmp::Reverse(g.degree_of(i)));
    println!("\nbest connected:");
    for &i in by_degree.iter().take(5) {
        println!("  {:<24} {}", g.node(i).as_str(), g.degree_of(i));
    }

    println!("\nfirst lines of the dump:");
    let mut dump = Vec::new();
    g.write_dump(&mut dump)?;
    for line in String::from_utf8_lossy(&dump).lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}
