//! Expanded retrofitting of the noisy toy embeddings to the toy graph.

use std::path::Path;

use graphvec::eval::{eval_relatedness, load_relatedness, Split};
use graphvec::io::{load_embeddings, load_graph_dump};
use graphvec::linalg::EmbeddingMatrix;
use graphvec::retrofit::{build_problem, retrofit_with_trace, RetrofitConfig};

fn rho(emb: &EmbeddingMatrix, dir: &Path) -> graphvec::Result<f64> {
    let file = std::fs::File::open(dir.join("relatedness.txt"))?;
    let ds = load_relatedness(std::io::BufReader::new(file), "toy", "en")?;
    Ok(eval_relatedness(emb, &ds, Split::All)?.rho)
}

fn main() -> graphvec::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let g = load_graph_dump(&dir.join("assertions.tsv"))?;
    let raw = load_embeddings(&dir.join("embeddings.txt"), "en")?;

    let problem = build_problem(&raw, &g)?;
    let observed = problem.alpha().iter().filter(|&&a| a > 0.0).count();
    println!(
        "{} terms ({} with vectors, {} graph-only), {} edges, {} unreachable",
        problem.len(),
        observed,
        problem.len() - observed,
        problem.num_edges(),
        problem.unreachable_count()
    );

    let cfg = RetrofitConfig {
        max_iterations: 50,
        ..RetrofitConfig::default()
    };
    let (fitted, trace) = retrofit_with_trace(&problem, &cfg)?;
    for (i, psi) in trace.objective.iter().enumerate().take(6) {
        println!("  sweep {i:>2}: objective {psi:.4}");
    }
    println!(
        "{} sweeps, converged: {}, Gauss-Seidel from: {:?}",
        trace.iterations(),
        trace.converged,
        trace.gauss_seidel_from
    );
    println!("\nrelatedness ρ raw {:.3} -> retrofitted {:.3}", rho(&raw, &dir)?, rho(&fitted, &dir)?);
    Ok(())
}
