//! `corpus-scope` command line.
//!
//! Exit codes: 0 success, 1 internal failure, 2 unreadable or invalid input
//! and configuration, 3 empty result after filtering.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corpus_scope::config::{Overrides, PipelineConfig};
use corpus_scope::pipeline::{self, RunOptions, Stage};

#[derive(Parser, Debug)]
#[command(
    name = "corpus-scope",
    version,
    about = "Bibliometric profiling of a literature corpus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and filter the input, writing the normalized corpus and record errors.
    Ingest,
    /// Year counts with the quadratic trend, top terms and document types.
    Eda,
    /// Correspondence analysis of the document-term matrix.
    Lsa,
    /// Topic model fitted by collapsed Gibbs sampling.
    Lda,
    /// Thresholded bigram graph.
    Bigrams,
    /// All stages in order.
    Run {
        /// Recompute earlier stages in memory and write outputs from this stage on.
        #[arg(long, value_name = "STAGE")]
        from: Option<Stage>,
    },
    /// Profile one country's documents next to the full corpus.
    Compare,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bibliographic export (CSV or JSON lines).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Input format: csv or jsonl. Inferred from the extension by default.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Selection phrase; an empty string disables filtering.
    #[arg(long, global = true)]
    phrase: Option<String>,
    /// Stopword list, one term per line.
    #[arg(long, global = true)]
    stoplist: Option<PathBuf>,
    #[arg(long, global = true)]
    vocab_size: Option<usize>,
    /// Retained correspondence analysis dimensions.
    #[arg(long, global = true)]
    dims: Option<usize>,
    #[arg(long, global = true)]
    topics: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Gibbs sweeps.
    #[arg(long, global = true)]
    iters: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Minimum bigram frequency kept in the graph.
    #[arg(long, global = true)]
    bigram_threshold: Option<u64>,
    /// Country for `compare`.
    #[arg(long, global = true)]
    country: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            input: self.input.clone(),
            format: self.format.clone(),
            phrase: self.phrase.clone(),
            stoplist: self.stoplist.clone(),
            vocab_size: self.vocab_size,
            dims: self.dims,
            topics: self.topics,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iters,
            seed: self.seed,
            bigram_threshold: self.bigram_threshold,
            country: self.country.clone(),
            out: self.out.clone(),
            threads: self.threads,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let mut config = match &cli.common.config {
        Some(p) => match PipelineConfig::from_file(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(pipeline::exit_code(&e) as u8);
            }
        },
        None => PipelineConfig::default(),
    };
    config.apply(&cli.common.overrides());

    let result = match &cli.command {
        Command::Ingest => pipeline::run_pipeline(&config, &RunOptions::only(Stage::Ingest)),
        Command::Eda => pipeline::run_pipeline(&config, &RunOptions::only(Stage::Eda)),
        Command::Lsa => pipeline::run_pipeline(&config, &RunOptions::only(Stage::Lsa)),
        Command::Lda => pipeline::run_pipeline(&config, &RunOptions::only(Stage::Lda)),
        Command::Bigrams => pipeline::run_pipeline(&config, &RunOptions::only(Stage::Bigrams)),
        Command::Run { from } => {
            pipeline::run_pipeline(&config, &RunOptions::from_stage(from.unwrap_or(Stage::Ingest)))
        }
        Command::Compare => match config.country.clone() {
            Some(country) => pipeline::compare_subsets(&config, &country),
            None => {
                eprintln!("error: compare needs --country");
                return ExitCode::from(2);
            }
        },
    };

    match result {
        Ok(report) => {
            for name in &report.outputs {
                println!("{}", config.out.join(name).display());
            }
            if !report.record_errors.is_empty() {
                log::warn!("{} input records were rejected", report.record_errors.len());
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(pipeline::exit_code(&failure.error) as u8)
        }
    }
}
