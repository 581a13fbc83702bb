use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use poemscope::error::Error;
use poemscope::report::{run_tasks, EmbeddingSource, FeatureMode, RunConfig, Tasks, DEFAULT_SEED};
use poemscope::textprep::ReductionMode;

/// Unsupervised analysis of a poetry corpus.
#[derive(Parser, Debug)]
#[command(name = "poemscope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Word frequency histograms and word clouds per book.
    Freq(Common),
    /// K-means on top-5 bag-of-words vectors.
    ClusterTop5(Common),
    /// K-means on verse-scoped trigram vectors.
    ClusterTrigram(Common),
    /// Pairwise trigram cosine similarity heatmaps.
    Similarity(Common),
    /// Per-book LDA topics and topic word clouds.
    Lda(Common),
    /// LDA + embedding fusion through the autoencoder, then k-means.
    FuseCluster(Common),
    /// Run every analysis.
    ReportAll(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for LDA, the autoencoder and k-means.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// stem, lemmatize or none
    #[arg(long)]
    reduction: Option<ReductionMode>,
    #[arg(long)]
    lemma_dictionary: Option<PathBuf>,
    #[arg(long)]
    k_clusters: Option<usize>,
    #[arg(long)]
    k_topics: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Embedding table (TSV) for fuse-cluster.
    #[arg(long, conflicts_with = "hash_embeddings")]
    embeddings: Option<PathBuf>,
    /// Use the deterministic hash embedding provider.
    #[arg(long)]
    hash_embeddings: bool,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    ae_epochs: Option<usize>,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl Common {
    fn into_config(self) -> Result<RunConfig, Failure> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path).map_err(|e| Failure::Usage(e.to_string()))?,
            None => RunConfig::new("", "out"),
        };
        if let Some(c) = self.corpus {
            config.corpus = c;
        }
        if config.corpus.as_os_str().is_empty() {
            return Err(Failure::Usage("no corpus given (use --corpus or `corpus =` in --config)".into()));
        }
        if let Some(s) = self.seed {
            config.set_seed(s);
        }
        if let Some(o) = self.out {
            config.out = o;
        }
        if self.stopwords.is_some() {
            config.stopwords = self.stopwords;
        }
        if let Some(r) = self.reduction {
            config.reduction_mode = r;
        }
        if self.lemma_dictionary.is_some() {
            config.lemma_dictionary = self.lemma_dictionary;
        }
        if let Some(k) = self.k_clusters {
            config.k_clusters = k;
        }
        if let Some(k) = self.k_topics {
            config.k_topics = k;
        }
        if let Some(a) = self.alpha {
            config.alpha = a;
        }
        if let Some(e) = self.ae_epochs {
            config.ae_epochs = e;
        }
        if let Some(path) = self.embeddings {
            config.embedding = Some(EmbeddingSource::Table(path));
        } else if self.hash_embeddings || self.embedding_dim.is_some() {
            let (dim, seed) = match config.embedding {
                Some(EmbeddingSource::Hash { dim, seed }) => (dim, seed),
                _ => (poemscope::embed::DEFAULT_DIM, DEFAULT_SEED),
            };
            config.embedding = Some(EmbeddingSource::Hash {
                dim: self.embedding_dim.unwrap_or(dim),
                seed,
            });
        }
        config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (common, name) = match cli.command {
        Command::Freq(c) => (c, "freq"),
        Command::ClusterTop5(c) => (c, "cluster-top5"),
        Command::ClusterTrigram(c) => (c, "cluster-trigram"),
        Command::Similarity(c) => (c, "similarity"),
        Command::Lda(c) => (c, "lda"),
        Command::FuseCluster(c) => (c, "fuse-cluster"),
        Command::ReportAll(c) => (c, "report-all"),
    };
    let tasks = Tasks::for_command(name).expect("every subcommand maps to tasks");
    let mode = match name {
        "cluster-top5" => Some(FeatureMode::Top5),
        "cluster-trigram" => Some(FeatureMode::Trigram),
        "fuse-cluster" => Some(FeatureMode::Fused),
        _ => None,
    };
    let mut config = common.into_config()?;
    if let Some(m) = mode {
        config.mode = m;
    }
    if tasks.fused && config.embedding.is_none() {
        return Err(Failure::Usage(
            "fused clustering needs --embeddings FILE or --hash-embeddings".into(),
        ));
    }
    let bundle = run_tasks(&config, tasks).map_err(Failure::Run)?;
    println!(
        "wrote {} artifacts to {} ({})",
        bundle.artifacts.len(),
        bundle.out_dir.display(),
        bundle.meta_path.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
