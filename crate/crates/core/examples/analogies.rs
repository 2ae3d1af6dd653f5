//! Grid-searches the analogy weights on odd-numbered questions and reports
//! accuracy with its exact binomial interval.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use graphvec::eval::{grid_search_weights, load_analogies, solve_analogies, AnalogyWeights};
use graphvec::io::{load_embeddings, load_graph_dump};
use graphvec::retrofit::{build_problem, retrofit, RetrofitConfig};

fn main() -> graphvec::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let questions = load_analogies(BufReader::new(File::open(dir.join("analogies.tsv"))?))?;
    let q = &questions[0];
    println!("{} : {}  ->  choices {:?}, answer {}", q.stem.0, q.stem.1, q.choices, q.answer);

    let g = load_graph_dump(&dir.join("assertions.tsv"))?;
    let raw = load_embeddings(&dir.join("embeddings.txt"), "en")?;
    let fitted = retrofit(&build_problem(&raw, &g)?, &RetrofitConfig::default())?;

    for (name, emb) in [("raw", &raw), ("retrofitted", &fitted)] {
        let w = grid_search_weights(emb, &questions, "en", 10)?;
        let r = solve_analogies(emb, &questions, w, "en")?;
        let fixed = solve_analogies(emb, &questions, AnalogyWeights::new(0.2, 0.6), "en")?;
        println!(
            "{name:>12}: tuned w = ({:.1}, {:.1}) accuracy {:.3} [{:.3}, {:.3}]; at (0.2, 0.6) {:.3}",
            w.w1, w.w2, r.accuracy, r.ci_low, r.ci_high, fixed.accuracy
        );
    }
    Ok(())
}
