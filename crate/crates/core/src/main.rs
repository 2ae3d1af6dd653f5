use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use graphvec::eval::{AnalogyWeights, Split};
use graphvec::graph::AssertionFormat;
use graphvec::io::{load_embeddings, resolve_input, DATA_DIR_ENV};
use graphvec::pipeline::{self, EvalTasks, PipelineConfig, RelatednessInput};
use graphvec::ppmi::PruneMode;
use graphvec::retrofit::BetaWeighting;

#[derive(Parser)]
#[command(name = "graphvec", version, about = "Knowledge-graph word embeddings: build, retrofit, merge, evaluate")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Language of plain-text labels and queries.
    #[arg(long, global = true, default_value = "en")]
    lang: String,
    /// Skip lines with unknown relations instead of failing.
    #[arg(long, global = true)]
    lax: bool,
    /// Output dimensionality of PPMI and merge.
    #[arg(long, global = true, default_value_t = 300)]
    dims: usize,
    /// Maximum retrofitting sweeps.
    #[arg(long, global = true, default_value_t = 10)]
    iterations: usize,
    /// Retrofitting stops once the mean row movement is below this.
    #[arg(long, global = true, default_value_t = 1e-4)]
    tolerance: f64,
    /// Skip mean-centering and normalization after retrofitting.
    #[arg(long, global = true)]
    no_center: bool,
    /// Spacing of the analogy weight grid on [0, 1].
    #[arg(long, global = true, default_value_t = 0.1)]
    grid_step: f64,
    /// Directory searched for relative input paths.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    TsvUri,
    TsvRaw,
}

#[derive(Subcommand)]
enum Command {
    /// Load an assertion file and write the canonical graph dump.
    BuildGraph {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "tsv-uri")]
        format: Format,
    },
    /// Build PPMI embeddings from a graph dump.
    Ppmi {
        graph: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 3)]
        min_degree: usize,
        /// Prune once instead of until no node falls below the threshold.
        #[arg(long)]
        single_pass: bool,
    },
    /// Retrofit an embedding file to a graph dump.
    Retrofit {
        embeddings: PathBuf,
        graph: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Divide edge weights by the geometric mean of endpoint degrees.
        #[arg(long)]
        degree_normalized: bool,
    },
    /// Align two embedding files in one space.
    Merge {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Graph dump whose missing nodes get neighbor-averaged vectors.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Score an embedding file on evaluation datasets.
    Eval {
        embeddings: PathBuf,
        /// Relatedness file, optionally suffixed with @dev, @test or @all.
        #[arg(long)]
        relatedness: Vec<String>,
        /// Split for relatedness files without a suffix.
        #[arg(long, default_value = "all")]
        split: String,
        #[arg(long)]
        analogies: Option<PathBuf>,
        /// Fixed analogy weights "w1,w2"; grid search when omitted.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        cloze: Option<PathBuf>,
        /// Leave unknown tokens out of cloze averages.
        #[arg(long)]
        cloze_skip_oov: bool,
        /// Also write the tab-separated report here.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Print the terms nearest to a query.
    Neighbors {
        embeddings: PathBuf,
        query: String,
        #[arg(short, default_value_t = 10)]
        k: usize,
    },
}

fn grid_steps(step: f64) -> anyhow::Result<usize> {
    if !(step > 0.0 && step <= 1.0) {
        bail!("--grid-step must be in (0, 1], got {step}");
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        bail!("--grid-step {step} does not divide 1 evenly");
    }
    Ok(n as usize)
}

fn parse_weights(text: &str) -> anyhow::Result<AnalogyWeights> {
    let (a, b) = text
        .split_once(',')
        .with_context(|| format!("weights must look like 0.2,0.6, got {text:?}"))?;
    Ok(AnalogyWeights::new(a.trim().parse()?, b.trim().parse()?))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(dir) = &cli.data_dir {
        std::env::set_var(DATA_DIR_ENV, dir);
    }
    let mut cfg = PipelineConfig {
        language: cli.lang.clone(),
        lax: cli.lax,
        grid_steps: grid_steps(cli.grid_step)?,
        ..PipelineConfig::default()
    }
    .with_dims(cli.dims)
    .with_seed(cli.seed);
    cfg.retrofit.max_iterations = cli.iterations;
    cfg.retrofit.convergence_tol = cli.tolerance;
    cfg.retrofit.center_and_normalize = !cli.no_center;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::BuildGraph {
            input,
            output,
            format,
        } => {
            let format = match format {
                Format::TsvUri => AssertionFormat::TsvUri,
                Format::TsvRaw => AssertionFormat::TsvRaw,
            };
            let s = pipeline::cmd_build_graph(&input, format, &output, &cfg)?;
            writeln!(out, "nodes\t{}\nedges\t{}", s.nodes, s.edges)?;
            if s.load.skipped_unknown_relation > 0 {
                writeln!(out, "skipped_unknown_relation\t{}", s.load.skipped_unknown_relation)?;
            }
            if s.load.skipped_external > 0 {
                writeln!(out, "skipped_external\t{}", s.load.skipped_external)?;
            }
        }
        Command::Ppmi {
            graph,
            output,
            min_degree,
            single_pass,
        } => {
            cfg.ppmi.prune_min_degree = min_degree;
            if single_pass {
                cfg.ppmi.prune_mode = PruneMode::SinglePass;
            }
            let s = pipeline::cmd_ppmi(&graph, &output, &cfg)?;
            writeln!(out, "rows\t{}\ndims\t{}\npruned\t{}\nnonzeros\t{}", s.rows, s.dims, s.pruned, s.nnz)?;
        }
        Command::Retrofit {
            embeddings,
            graph,
            output,
            degree_normalized,
        } => {
            if degree_normalized {
                cfg.beta = BetaWeighting::DegreeNormalized;
            }
            let s = pipeline::cmd_retrofit(&embeddings, &graph, &output, &cfg)?;
            writeln!(
                out,
                "rows\t{}\nadded\t{}\nunreachable\t{}\niterations\t{}\nconverged\t{}",
                s.rows, s.added, s.unreachable, s.iterations, s.converged
            )?;
            if let Some(it) = s.gauss_seidel_from {
                writeln!(out, "gauss_seidel_from\t{it}")?;
            }
        }
        Command::Merge {
            first,
            second,
            output,
            graph,
        } => {
            let s = pipeline::cmd_merge(&first, &second, graph.as_deref(), &output, &cfg)?;
            writeln!(out, "rows\t{}\ncommon\t{}\nexpanded\t{}", s.rows, s.common, s.expanded)?;
        }
        Command::Eval {
            embeddings,
            relatedness,
            split,
            analogies,
            weights,
            cloze,
            cloze_skip_oov,
            tsv,
        } => {
            let split: Split = split.parse()?;
            let tasks = EvalTasks {
                relatedness: relatedness
                    .iter()
                    .map(|r| RelatednessInput::parse(r, split))
                    .collect::<Result<_, _>>()?,
                analogies,
                analogy_weights: weights.as_deref().map(parse_weights).transpose()?,
                cloze,
                cloze_include_oov: !cloze_skip_oov,
            };
            if tasks.relatedness.is_empty() && tasks.analogies.is_none() && tasks.cloze.is_none() {
                bail!("nothing to evaluate: pass --relatedness, --analogies or --cloze");
            }
            let report = pipeline::cmd_eval(&embeddings, &tasks, &cfg)?;
            report.write_text(&mut out)?;
            if let Some(path) = tsv {
                let file = File::create(&path).with_context(|| path.display().to_string())?;
                report.write_tsv(BufWriter::new(file))?;
            }
        }
        Command::Neighbors { embeddings, query, k } => {
            let emb = load_embeddings(&resolve_input(&embeddings), &cfg.language)?;
            for (term, score) in pipeline::neighbors(&emb, &query, k, &cfg.language)? {
                writeln!(out, "{term}\t{score:.6}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
