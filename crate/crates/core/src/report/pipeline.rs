//! End-to-end orchestration. Every artifact is rendered in memory first and
//! written only after all stages succeed, so a failed run leaves no partial
//! bundle behind.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::cluster::{kmeans, pca_project};
use crate::corpus::{load_corpus, load_stopwords, Corpus};
use crate::embed::{hash_provider, load_embedding_table, poem_embedding, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::features::{
    build_ngram_vocabulary, build_vocabulary, csv_field, similarity_matrix, term_frequencies, top_k_bow,
    trigram_bow, FeatureVector,
};
use crate::fuse::{build_fusion_input, encode, train_autoencoder, TrainConfig};
use crate::numfmt::sig9;
use crate::report::config::{EmbeddingSource, FeatureMode, RunConfig};
use crate::report::svg::{render_heatmap, render_histogram, render_scatter};
use crate::report::wordcloud::{render_wordcloud, CloudOptions};
use crate::textprep::{load_lemma_dictionary, preprocess_poem, PrepConfig, TokenizedPoem};
use crate::topics::{fit_lda, LdaConfig, TopicModel};

/// Which analyses to run. `report-all` turns everything on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tasks {
    pub freq: bool,
    pub top5: bool,
    pub trigram: bool,
    pub similarity: bool,
    pub lda: bool,
    pub fused: bool,
}

impl Tasks {
    pub fn all() -> Self {
        Self {
            freq: true,
            top5: true,
            trigram: true,
            similarity: true,
            lda: true,
            fused: true,
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        [
            (self.freq, "freq"),
            (self.top5, "top5"),
            (self.trigram, "trigram"),
            (self.similarity, "similarity"),
            (self.lda, "lda"),
            (self.fused, "fused"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }

    /// Tasks behind a CLI subcommand name such as `cluster-top5` or `report-all`.
    pub fn for_command(name: &str) -> Option<Self> {
        let none = Self::default();
        Some(match name {
            "freq" => Self { freq: true, ..none },
            "cluster-top5" => Self::for_mode(FeatureMode::Top5),
            "cluster-trigram" => Self::for_mode(FeatureMode::Trigram),
            "similarity" => Self { similarity: true, ..none },
            "lda" => Self { lda: true, ..none },
            "fuse-cluster" => Self::for_mode(FeatureMode::Fused),
            "report-all" => Self::all(),
            _ => return None,
        })
    }

    pub fn for_mode(mode: FeatureMode) -> Self {
        let mut t = Self::default();
        match mode {
            FeatureMode::Top5 => t.top5 = true,
            FeatureMode::Trigram => t.trigram = true,
            FeatureMode::Fused => t.fused = true,
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    Histogram,
    WordCloud,
    TopicWordCloud,
    Heatmap,
    Scatter,
    Csv,
    Model,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    /// Book position, or `None` for corpus-level files.
    pub book: Option<usize>,
    pub kind: ArtifactKind,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportBundle {
    pub out_dir: PathBuf,
    pub book_titles: Vec<String>,
    pub artifacts: Vec<Artifact>,
    /// `run.meta` inside `out_dir`.
    pub meta_path: PathBuf,
}

impl ReportBundle {
    pub fn book_artifacts(&self, book: usize) -> impl Iterator<Item = &Artifact> {
        self.artifacts.iter().filter(move |a| a.book == Some(book))
    }

    pub fn full_path(&self, artifact: &Artifact) -> PathBuf {
        self.out_dir.join(&artifact.path)
    }
}

pub fn book_dir(book: usize) -> String {
    format!("book-{:02}", book + 1)
}

struct Staged {
    path: String,
    book: Option<usize>,
    kind: ArtifactKind,
    bytes: Vec<u8>,
}

#[derive(Default)]
struct Stage(Vec<Staged>);

impl Stage {
    fn add(&mut self, book: Option<usize>, name: &str, kind: ArtifactKind, content: String) {
        let path = match book {
            Some(b) => format!("{}/{name}", book_dir(b)),
            None => name.to_owned(),
        };
        self.0.push(Staged {
            path,
            book,
            kind,
            bytes: content.into_bytes(),
        });
    }
}

trait InStage<T> {
    fn stage(self, name: &'static str) -> Result<T>;
}

impl<T> InStage<T> for Result<T> {
    fn stage(self, name: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(name))
    }
}

/// Runs the clustering selected by `config.mode`.
pub fn run_pipeline(config: &RunConfig) -> Result<ReportBundle> {
    run_tasks(config, Tasks::for_mode(config.mode))
}

pub fn run_tasks(config: &RunConfig, tasks: Tasks) -> Result<ReportBundle> {
    config.validate().stage("config")?;
    if tasks.fused && config.embedding.is_none() {
        return Err(Error::InvalidInput("fused mode requires an embedding source".into())).stage("config");
    }
    let corpus = load_corpus(&config.corpus).stage("load")?;
    let books = preprocess(&corpus, config)?;
    let mut staged = Stage::default();
    analyse(&corpus, &books, config, tasks, &mut staged)?;
    write_bundle(&corpus, config, tasks, staged).stage("emit")
}

fn preprocess(corpus: &Corpus, config: &RunConfig) -> Result<Vec<Vec<TokenizedPoem>>> {
    let stopwords = load_stopwords(config.stopwords.as_deref()).stage("load")?;
    let lemmas = match &config.lemma_dictionary {
        Some(p) => Some(load_lemma_dictionary(p).stage("load")?),
        None => None,
    };
    let prep = PrepConfig::new(stopwords, config.reduction_mode, lemmas).stage("preprocess")?;
    corpus
        .books
        .iter()
        .map(|b| b.poems.iter().map(|p| preprocess_poem(p, &prep)).collect())
        .collect::<Result<_>>()
        .stage("preprocess")
}

fn analyse(
    corpus: &Corpus,
    books: &[Vec<TokenizedPoem>],
    config: &RunConfig,
    tasks: Tasks,
    staged: &mut Stage,
) -> Result<()> {
    let all: Vec<TokenizedPoem> = books.iter().flatten().cloned().collect();
    if tasks.freq {
        for (b, poems) in books.iter().enumerate() {
            frequency_report(b, poems, config, staged)?;
        }
    }
    if tasks.top5 {
        let vocab = build_vocabulary(&all).stage("features")?;
        for (b, poems) in books.iter().enumerate() {
            let vectors: Vec<FeatureVector> = poems
                .iter()
                .map(|p| top_k_bow(p, &vocab, config.top_k))
                .collect::<Result<_>>()
                .stage("features")?;
            staged.add(Some(b), "top5_features.csv", ArtifactKind::Csv, sparse_csv(&vectors, vocab.terms()));
            let points: Vec<Vec<f64>> = vectors.into_iter().map(|v| v.values).collect();
            cluster_report(corpus, b, "top5", &points, config, staged)?;
        }
    }
    if tasks.trigram || tasks.similarity {
        let vocab = build_ngram_vocabulary(&all, 3).stage("features")?;
        let labels: Vec<String> = vocab.terms().iter().map(|g| g.join(" ")).collect();
        for (b, poems) in books.iter().enumerate() {
            let vectors: Vec<FeatureVector> = poems
                .iter()
                .map(|p| trigram_bow(p, &vocab))
                .collect::<Result<_>>()
                .stage("features")?;
            if tasks.similarity {
                let matrix = similarity_matrix(&vectors).stage("similarity")?;
                staged.add(Some(b), "similarity.csv", ArtifactKind::Csv, matrix.to_csv());
                staged.add(Some(b), "heatmap.svg", ArtifactKind::Heatmap, render_heatmap(&matrix));
            }
            if tasks.trigram {
                staged.add(Some(b), "trigram_features.csv", ArtifactKind::Csv, sparse_csv(&vectors, &labels));
                let points: Vec<Vec<f64>> = vectors.into_iter().map(|v| v.values).collect();
                cluster_report(corpus, b, "trigram", &points, config, staged)?;
            }
        }
    }
    if tasks.lda || tasks.fused {
        let models = books
            .iter()
            .enumerate()
            .map(|(b, poems)| topic_report(b, poems, config, staged))
            .collect::<Result<Vec<_>>>()?;
        if tasks.fused {
            fused_report(corpus, books, &models, config, staged)?;
        }
    }
    Ok(())
}

fn frequency_report(b: usize, poems: &[TokenizedPoem], config: &RunConfig, staged: &mut Stage) -> Result<()> {
    let mut freqs: BTreeMap<String, usize> = BTreeMap::new();
    for poem in poems {
        for (term, count) in term_frequencies(poem) {
            *freqs.entry(term).or_default() += count;
        }
    }
    if freqs.is_empty() {
        return Err(Error::InvalidInput(format!("book {} has no tokens after preprocessing", b + 1))).stage("freq");
    }
    let mut rows: Vec<(&String, &usize)> = freqs.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(a.1));
    let mut csv = String::from("term,count\n");
    for (term, count) in rows {
        writeln!(csv, "{},{count}", csv_field(term)).unwrap();
    }
    staged.add(Some(b), "frequencies.csv", ArtifactKind::Csv, csv);
    staged.add(
        Some(b),
        "histogram.svg",
        ArtifactKind::Histogram,
        render_histogram(&freqs, config.histogram_top_n).stage("freq")?,
    );
    let weights: Vec<(String, f64)> = freqs.into_iter().map(|(t, c)| (t, c as f64)).collect();
    staged.add(
        Some(b),
        "wordcloud.svg",
        ArtifactKind::WordCloud,
        render_wordcloud(&weights, &CloudOptions::default()).stage("freq")?,
    );
    Ok(())
}

/// Nonzero entries only: `poem_index,term,value`.
fn sparse_csv(vectors: &[FeatureVector], labels: &[String]) -> String {
    let mut out = String::from("poem_index,term,value\n");
    for v in vectors {
        for (j, x) in v.values.iter().enumerate() {
            if *x != 0.0 {
                writeln!(out, "{},{},{}", v.poem_index, csv_field(&labels[j]), sig9(*x)).unwrap();
            }
        }
    }
    out
}

fn cluster_report(
    corpus: &Corpus,
    b: usize,
    prefix: &str,
    points: &[Vec<f64>],
    config: &RunConfig,
    staged: &mut Stage,
) -> Result<()> {
    let book = &corpus.books[b];
    let indices: Vec<usize> = book.poems.iter().map(|p| p.index).collect();
    let titles: Vec<String> = book.poems.iter().map(|p| p.title.clone()).collect();
    let assignment = kmeans(points, config.k_clusters, config.kmeans_seed).stage("kmeans")?;
    let projection = pca_project(points, 2).stage("pca")?;
    staged.add(Some(b), &format!("{prefix}_clusters.csv"), ArtifactKind::Csv, assignment.to_csv(&indices));
    staged.add(Some(b), &format!("{prefix}_projection.csv"), ArtifactKind::Csv, projection.to_csv(&indices));
    staged.add(
        Some(b),
        &format!("{prefix}_scatter.svg"),
        ArtifactKind::Scatter,
        render_scatter(&projection, &assignment, &indices, &titles).stage("emit")?,
    );
    Ok(())
}

fn topic_report(b: usize, poems: &[TokenizedPoem], config: &RunConfig, staged: &mut Stage) -> Result<TopicModel> {
    let vocab = build_vocabulary(poems).stage("lda")?;
    let mut lda = LdaConfig::with_topics(config.k_topics);
    lda.seed = config.lda_seed;
    lda.max_sweeps = config.lda_max_sweeps;
    let model = fit_lda(poems, &vocab, &lda).stage("lda")?;
    staged.add(Some(b), "lda_theta.csv", ArtifactKind::Csv, model.theta_csv());
    staged.add(Some(b), "lda_model.txt", ArtifactKind::Model, model.to_text());
    let mut topics = String::from("topic,rank,term,probability\n");
    let n = config.topic_words.min(vocab.len());
    for t in 0..model.k {
        let mut order: Vec<usize> = (0..vocab.len()).collect();
        order.sort_by(|&x, &y| model.phi[t][y].total_cmp(&model.phi[t][x]));
        let words: Vec<(String, f64)> = order[..n]
            .iter()
            .map(|&w| (vocab.terms()[w].clone(), model.phi[t][w]))
            .collect();
        for (rank, (term, p)) in words.iter().enumerate() {
            writeln!(topics, "{t},{},{},{}", rank + 1, csv_field(term), sig9(*p)).unwrap();
        }
        staged.add(
            Some(b),
            &format!("topic-{t}_wordcloud.svg"),
            ArtifactKind::TopicWordCloud,
            render_wordcloud(&words, &CloudOptions::default()).stage("lda")?,
        );
    }
    staged.add(Some(b), "lda_topics.csv", ArtifactKind::Csv, topics);
    Ok(model)
}

fn provider(source: &EmbeddingSource) -> Result<Box<dyn EmbeddingProvider>> {
    Ok(match source {
        EmbeddingSource::Table(path) => Box::new(load_embedding_table(path)?),
        EmbeddingSource::Hash { dim, seed } => Box::new(hash_provider(*dim, *seed)?),
    })
}

fn fused_report(
    corpus: &Corpus,
    books: &[Vec<TokenizedPoem>],
    models: &[TopicModel],
    config: &RunConfig,
    staged: &mut Stage,
) -> Result<()> {
    let source = config.embedding.as_ref().expect("checked before loading");
    let provider = provider(source).stage("embed")?;
    let mut inputs = Vec::new();
    let mut spans = Vec::new();
    let mut oov = 0;
    for (poems, model) in books.iter().zip(models) {
        let start = inputs.len();
        for (d, poem) in poems.iter().enumerate() {
            let e = poem_embedding(poem, provider.as_ref());
            oov += e.oov_tokens;
            inputs.push(build_fusion_input(poem.poem_index, &model.theta[d], &e.vector, config.alpha).stage("fuse")?);
        }
        spans.push(start..inputs.len());
    }
    if oov > 0 {
        log::warn!("embed: {oov} tokens had no vector");
    }
    let train = TrainConfig {
        hidden: config.ae_hidden,
        epochs: config.ae_epochs,
        batch: config.ae_batch,
        seed: config.ae_seed,
        ..TrainConfig::default()
    };
    let model = train_autoencoder(&inputs, &train).stage("fuse")?;
    staged.add(None, "autoencoder.txt", ArtifactKind::Model, model.to_text());
    staged.add(None, "autoencoder_loss.csv", ArtifactKind::Csv, model.loss_csv());
    for (b, span) in spans.into_iter().enumerate() {
        let latents = inputs[span]
            .iter()
            .map(|x| encode(&model, x).map(|l| l.vector))
            .collect::<Result<Vec<_>>>()
            .stage("fuse")?;
        let mut csv = String::from("poem_index");
        for j in 0..model.hidden_dim {
            write!(csv, ",z{j}").unwrap();
        }
        csv.push('\n');
        for (poem, z) in corpus.books[b].poems.iter().zip(&latents) {
            write!(csv, "{}", poem.index).unwrap();
            for x in z {
                write!(csv, ",{}", sig9(*x)).unwrap();
            }
            csv.push('\n');
        }
        staged.add(Some(b), "fused_latents.csv", ArtifactKind::Csv, csv);
        cluster_report(corpus, b, "fused", &latents, config, staged)?;
    }
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn write_bundle(corpus: &Corpus, config: &RunConfig, tasks: Tasks, staged: Stage) -> Result<ReportBundle> {
    let out = &config.out;
    let mut artifacts = Vec::with_capacity(staged.0.len());
    let mut meta = String::from("# poemscope run\n");
    meta.push_str(&config.echo());
    writeln!(meta, "tasks = {}", tasks.names().join(",")).unwrap();
    for (b, book) in corpus.books.iter().enumerate() {
        writeln!(meta, "book {} = {}", book_dir(b), book.title).unwrap();
    }
    for s in &staged.0 {
        let sha256 = sha256_hex(&s.bytes);
        writeln!(meta, "sha256 {sha256} {}", s.path).unwrap();
        artifacts.push(Artifact {
            path: s.path.clone(),
            book: s.book,
            kind: s.kind,
            sha256,
        });
    }
    let mut files: Vec<(PathBuf, &[u8])> = staged.0.iter().map(|s| (out.join(&s.path), s.bytes.as_slice())).collect();
    let meta_path = out.join("run.meta");
    files.push((meta_path.clone(), meta.as_bytes()));
    write_all_or_nothing(&files)?;
    Ok(ReportBundle {
        out_dir: out.clone(),
        book_titles: corpus.books.iter().map(|b| b.title.clone()).collect(),
        artifacts,
        meta_path,
    })
}

fn write_all_or_nothing(files: &[(PathBuf, &[u8])]) -> Result<()> {
    let mut created_dirs: Vec<PathBuf> = Vec::new();
    let mut written: Vec<&Path> = Vec::new();
    let result = (|| {
        for (path, bytes) in files {
            if let Some(parent) = path.parent() {
                let mut missing = Vec::new();
                let mut p = parent;
                while !p.as_os_str().is_empty() && !p.exists() {
                    missing.push(p.to_path_buf());
                    match p.parent() {
                        Some(q) => p = q,
                        None => break,
                    }
                }
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                created_dirs.extend(missing);
            }
            fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
            written.push(path);
        }
        Ok(())
    })();
    if result.is_err() {
        for path in written {
            let _ = fs::remove_file(path);
        }
        // deepest first
        created_dirs.sort_by_key(|d| std::cmp::Reverse(d.components().count()));
        for dir in created_dirs {
            let _ = fs::remove_dir(dir);
        }
    }
    result
}
