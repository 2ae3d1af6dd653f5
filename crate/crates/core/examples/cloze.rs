//! Bag-of-vectors story cloze: pick the ending whose average vector is
//! closest to the context's.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use graphvec::eval::{eval_cloze_with, load_cloze, ClozeOptions};
use graphvec::io::{load_embeddings, load_graph_dump};
use graphvec::retrofit::{build_problem, retrofit, RetrofitConfig};

fn main() -> graphvec::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let stories = load_cloze(BufReader::new(File::open(dir.join("cloze.csv"))?))?;
    let s = &stories[0];
    println!("{}", s.context.join(" "));
    println!("  1) {}\n  2) {}\n  correct: {}\n", s.endings[0], s.endings[1], s.correct);

    let g = load_graph_dump(&dir.join("assertions.tsv"))?;
    let raw = load_embeddings(&dir.join("embeddings.txt"), "en")?;
    let fitted = retrofit(&build_problem(&raw, &g)?, &RetrofitConfig::default())?;
    for (name, emb) in [("raw", &raw), ("retrofitted", &fitted)] {
        for include_oov in [true, false] {
            let opts = ClozeOptions {
                include_oov,
                ..ClozeOptions::default()
            };
            let r = eval_cloze_with(emb, &stories, &opts)?;
            println!(
                "{name:>12} (unknown words {}): {}/{} = {:.3} [{:.3}, {:.3}]",
                if include_oov { "averaged in" } else { "skipped" },
                r.correct,
                r.n,
                r.accuracy,
                r.ci_low,
                r.ci_high
            );
        }
    }
    Ok(())
}
