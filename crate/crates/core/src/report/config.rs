//! Run configuration and its flat `key = value` file format.
//!
//! ```text
//! # analysis of the fixture corpus
//! corpus = corpus
//! mode = fused
//! embedding_provider = hash
//! embedding_dim = 768
//! ```
//!
//! Relative paths in a config file resolve against the file's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cluster::DEFAULT_K;
use crate::embed::DEFAULT_DIM;
use crate::error::{Error, Result};
use crate::fuse::{DEFAULT_ALPHA, DEFAULT_BATCH, DEFAULT_EPOCHS, DEFAULT_HIDDEN};
use crate::textprep::ReductionMode;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    Top5,
    Trigram,
    Fused,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Top5 => "top5",
            Self::Trigram => "trigram",
            Self::Fused => "fused",
        }
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top5" => Ok(Self::Top5),
            "trigram" => Ok(Self::Trigram),
            "fused" => Ok(Self::Fused),
            other => Err(Error::InvalidInput(format!(
                "unknown mode {other:?} (expected top5, trigram or fused)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingSource {
    Table(PathBuf),
    Hash { dim: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub reduction_mode: ReductionMode,
    pub lemma_dictionary: Option<PathBuf>,
    pub mode: FeatureMode,
    pub k_clusters: usize,
    pub k_topics: usize,
    pub alpha: f64,
    pub embedding: Option<EmbeddingSource>,
    pub lda_seed: u64,
    pub ae_seed: u64,
    pub kmeans_seed: u64,
    pub out: PathBuf,
    pub top_k: usize,
    pub histogram_top_n: usize,
    pub topic_words: usize,
    pub lda_max_sweeps: usize,
    pub ae_hidden: usize,
    pub ae_epochs: usize,
    pub ae_batch: usize,
}

impl RunConfig {
    pub fn new(corpus: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            corpus: corpus.into(),
            stopwords: None,
            reduction_mode: ReductionMode::Stem,
            lemma_dictionary: None,
            mode: FeatureMode::Top5,
            k_clusters: DEFAULT_K,
            k_topics: 4,
            alpha: DEFAULT_ALPHA,
            embedding: None,
            lda_seed: DEFAULT_SEED,
            ae_seed: DEFAULT_SEED,
            kmeans_seed: DEFAULT_SEED,
            out: out.into(),
            top_k: 5,
            histogram_top_n: 20,
            topic_words: 20,
            lda_max_sweeps: 1000,
            ae_hidden: DEFAULT_HIDDEN,
            ae_epochs: DEFAULT_EPOCHS,
            ae_batch: DEFAULT_BATCH,
        }
    }

    /// Sets all three seeds.
    pub fn set_seed(&mut self, seed: u64) {
        self.lda_seed = seed;
        self.ae_seed = seed;
        self.kmeans_seed = seed;
    }

    /// Uses the deterministic hash provider with the default dimension.
    pub fn with_hash_embeddings(mut self) -> Self {
        self.embedding = Some(EmbeddingSource::Hash {
            dim: DEFAULT_DIM,
            seed: DEFAULT_SEED,
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k_clusters", self.k_clusters),
            ("k_topics", self.k_topics),
            ("top_k", self.top_k),
            ("histogram_top_n", self.histogram_top_n),
            ("topic_words", self.topic_words),
            ("lda_max_sweeps", self.lda_max_sweeps),
            ("ae_hidden", self.ae_hidden),
            ("ae_epochs", self.ae_epochs),
            ("ae_batch", self.ae_batch),
        ];
        for (key, value) in positive {
            if value == 0 {
                return Err(Error::InvalidInput(format!("{key} must be >= 1")));
            }
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidInput("alpha must be > 0".into()));
        }
        if self.reduction_mode == ReductionMode::Lemmatize && self.lemma_dictionary.is_none() {
            return Err(Error::InvalidInput(
                "reduction = lemmatize requires lemma_dictionary".into(),
            ));
        }
        if let Some(EmbeddingSource::Hash { dim: 0, .. }) = self.embedding {
            return Err(Error::InvalidInput("embedding_dim must be >= 1".into()));
        }
        Ok(())
    }

    /// Reads a config file. `corpus` is required unless supplied later by a flag.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut config = Self::new("", "out");
        let mut hash = false;
        let mut dim = DEFAULT_DIM;
        let mut hash_seed = DEFAULT_SEED;
        let mut table = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::format(path, line_no, "expected key = value"))?;
            let bad = |what: &str| Error::format(path, line_no, format!("{key}: invalid {what} {value:?}"));
            let num = || value.parse::<usize>().map_err(|_| bad("integer"));
            let seed = || value.parse::<u64>().map_err(|_| bad("seed"));
            let resolve = || base.join(value);
            match key {
                "corpus" => config.corpus = resolve(),
                "stopwords" => config.stopwords = Some(resolve()),
                "reduction" => config.reduction_mode = value.parse().map_err(|_| bad("reduction mode"))?,
                "lemma_dictionary" => config.lemma_dictionary = Some(resolve()),
                "mode" => config.mode = value.parse().map_err(|_| bad("mode"))?,
                "k_clusters" => config.k_clusters = num()?,
                "k_topics" => config.k_topics = num()?,
                "alpha" => config.alpha = value.parse().map_err(|_| bad("number"))?,
                "embeddings" => table = Some(resolve()),
                "embedding_provider" => match value {
                    "hash" => hash = true,
                    "table" => hash = false,
                    _ => return Err(bad("provider")),
                },
                "embedding_dim" => dim = num()?,
                "embedding_seed" => hash_seed = seed()?,
                "seed" => config.set_seed(seed()?),
                "lda_seed" => config.lda_seed = seed()?,
                "ae_seed" => config.ae_seed = seed()?,
                "kmeans_seed" => config.kmeans_seed = seed()?,
                "out" => config.out = resolve(),
                "top_k" => config.top_k = num()?,
                "histogram_top_n" => config.histogram_top_n = num()?,
                "topic_words" => config.topic_words = num()?,
                "lda_max_sweeps" => config.lda_max_sweeps = num()?,
                "ae_hidden" => config.ae_hidden = num()?,
                "ae_epochs" => config.ae_epochs = num()?,
                "ae_batch" => config.ae_batch = num()?,
                _ => return Err(Error::format(path, line_no, format!("unknown key {key:?}"))),
            }
        }
        config.embedding = match (hash, table) {
            (true, _) => Some(EmbeddingSource::Hash { dim, seed: hash_seed }),
            (false, Some(p)) => Some(EmbeddingSource::Table(p)),
            (false, None) => None,
        };
        Ok(config)
    }

    /// Config echo written to `run.meta`. The output directory is left out so
    /// that identical runs into different directories produce identical files.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let opt = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_owned(), |p| p.display().to_string());
        let _ = writeln!(out, "corpus = {}", self.corpus.display());
        let _ = writeln!(out, "stopwords = {}", opt(&self.stopwords));
        let _ = writeln!(out, "reduction = {}", self.reduction_mode.as_str());
        let _ = writeln!(out, "lemma_dictionary = {}", opt(&self.lemma_dictionary));
        let _ = writeln!(out, "mode = {}", self.mode.as_str());
        let _ = writeln!(out, "k_clusters = {}", self.k_clusters);
        let _ = writeln!(out, "k_topics = {}", self.k_topics);
        let _ = writeln!(out, "alpha = {:?}", self.alpha);
        match &self.embedding {
            None => {
                let _ = writeln!(out, "embeddings = -");
            }
            Some(EmbeddingSource::Table(p)) => {
                let _ = writeln!(out, "embeddings = {}", p.display());
            }
            Some(EmbeddingSource::Hash { dim, seed }) => {
                let _ = writeln!(out, "embedding_provider = hash");
                let _ = writeln!(out, "embedding_dim = {dim}");
                let _ = writeln!(out, "embedding_seed = {seed}");
            }
        }
        for (key, value) in [
            ("lda_seed", self.lda_seed),
            ("ae_seed", self.ae_seed),
            ("kmeans_seed", self.kmeans_seed),
        ] {
            let _ = writeln!(out, "{key} = {value}");
        }
        for (key, value) in [
            ("top_k", self.top_k),
            ("histogram_top_n", self.histogram_top_n),
            ("topic_words", self.topic_words),
            ("lda_max_sweeps", self.lda_max_sweeps),
            ("ae_hidden", self.ae_hidden),
            ("ae_epochs", self.ae_epochs),
            ("ae_batch", self.ae_batch),
        ] {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, text).unwrap();
        let mut c = RunConfig::from_file(&path)?;
        // make paths comparable across temp dirs
        c.corpus = c.corpus.strip_prefix(dir.path()).unwrap_or(&c.corpus).to_path_buf();
        Ok(c)
    }

    #[test]
    fn defaults() {
        let c = RunConfig::new("c", "o");
        assert_eq!((c.k_clusters, c.k_topics, c.alpha), (4, 4, 15.0));
        assert_eq!((c.lda_seed, c.ae_seed, c.kmeans_seed), (42, 42, 42));
        assert_eq!((c.ae_hidden, c.ae_epochs, c.ae_batch), (16, 1000, 128));
        c.validate().unwrap();
    }

    #[test]
    fn file_round_trip() {
        let c = parse(
            "# comment\ncorpus = books\nmode = fused\nseed = 7\nkmeans_seed = 9\nembedding_provider = hash\nembedding_dim = 32\n\nk_topics=3\n",
        )
        .unwrap();
        assert_eq!(c.corpus, PathBuf::from("books"));
        assert_eq!(c.mode, FeatureMode::Fused);
        assert_eq!((c.lda_seed, c.kmeans_seed), (7, 9));
        assert_eq!(c.k_topics, 3);
        assert_eq!(c.embedding, Some(EmbeddingSource::Hash { dim: 32, seed: 42 }));
    }

    #[test]
    fn file_errors() {
        assert!(parse("corpus books\n").is_err());
        assert!(parse("colour = red\n").is_err());
        assert!(parse("k_clusters = many\n").is_err());
        assert!(parse("mode = umap\n").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::new("c", "o");
        c.k_clusters = 0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::new("c", "o");
        c.reduction_mode = ReductionMode::Lemmatize;
        assert!(c.validate().is_err());
    }
}
