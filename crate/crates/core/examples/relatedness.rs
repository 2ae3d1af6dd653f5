//! Scores a relatedness file on each split rule and shows how OOV pairs
//! enter the ranking.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use graphvec::eval::{eval_relatedness, load_relatedness, Split, SplitRule};
use graphvec::io::load_embeddings;

fn main() -> graphvec::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let emb = load_embeddings(&dir.join("embeddings.txt"), "en")?;
    let ds = load_relatedness(BufReader::new(File::open(dir.join("relatedness.txt"))?), "toy", "en")?;

    let all = eval_relatedness(&emb, &ds, Split::All)?;
    println!(
        "all:  ρ = {:.3}  95% CI [{:.3}, {:.3}]  n = {}  oov pairs = {}",
        all.rho, all.ci_low, all.ci_high, all.n, all.oov_count
    );

    // the same file split like the rare-word set: every third line is test
    let rw = ds.clone().with_split_rule(SplitRule::EveryThird);
    for split in [Split::Dev, Split::Test] {
        let r = eval_relatedness(&emb, &rw, split)?;
        println!("{split}: ρ = {:.3}  n = {}", r.rho, r.n);
    }

    println!("\nfirst OOV pairs (scored 0):");
    for (pair, score) in ds.pairs.iter().zip(&all.scores).filter(|(_, &s)| s == 0.0).take(3) {
        println!("  {} / {}  gold {:.2}  model {score}", pair.word1, pair.word2, pair.gold);
    }
    Ok(())
}
