//! Every stage end to end on the toy corpus, through the same entry points
//! the command-line tool uses, with outputs in a scratch directory.

use std::path::Path;
use std::time::Instant;

use graphvec::eval::Split;
use graphvec::graph::AssertionFormat;
use graphvec::pipeline::{self, EvalTasks, PipelineConfig, RelatednessInput};

fn main() -> graphvec::Result<()> {
    let toy = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let work = std::env::temp_dir().join("graphvec-full-pipeline");
    std::fs::create_dir_all(&work)?;
    let cfg = PipelineConfig::default().with_dims(20);
    let start = Instant::now();

    let graph = work.join("graph.tsv");
    let g = pipeline::cmd_build_graph(&toy.join("assertions.tsv"), AssertionFormat::TsvUri, &graph, &cfg)?;
    println!("graph: {} nodes, {} edges", g.nodes, g.edges);

    let ppmi = work.join("ppmi.txt");
    let p = pipeline::cmd_ppmi(&graph, &ppmi, &cfg)?;
    println!("ppmi: {} rows, {} pruned", p.rows, p.pruned);

    let retro = work.join("retrofit.txt");
    let retro_alt = work.join("retrofit_alt.txt");
    let r = pipeline::cmd_retrofit(&toy.join("embeddings.txt"), &graph, &retro, &cfg)?;
    pipeline::cmd_retrofit(&toy.join("embeddings_alt.txt"), &graph, &retro_alt, &cfg)?;
    println!("retrofit: {} rows, {} added from the graph", r.rows, r.added);

    let merged = work.join("merged.txt");
    let m = pipeline::cmd_merge(&retro, &retro_alt, Some(&graph), &merged, &cfg)?;
    println!("merge: {} rows, {} shared", m.rows, m.common);

    let tasks = EvalTasks {
        relatedness: vec![RelatednessInput {
            path: toy.join("relatedness.txt"),
            split: Split::All,
        }],
        analogies: Some(toy.join("analogies.tsv")),
        analogy_weights: None,
        cloze: Some(toy.join("cloze.csv")),
        cloze_include_oov: true,
    };
    for (name, path) in [
        ("raw", toy.join("embeddings.txt")),
        ("ppmi", ppmi),
        ("retrofitted", retro),
        ("merged", merged),
    ] {
        println!("\n== {name}");
        print!("{}", pipeline::cmd_eval(&path, &tasks, &cfg)?);
    }
    println!("\ndone in {:.2} s; files in {}", start.elapsed().as_secs_f64(), work.display());
    Ok(())
}
