//! Unsupervised analysis of small poetry corpora.
//!
//! The pipeline loads a corpus of books and poems, normalizes and stems the
//! text, builds bag-of-words and trigram features, fits per-book LDA topic
//! models, fuses topic mixtures with token embeddings through a small
//! autoencoder, clusters the result with k-means and renders SVG reports.

pub mod cluster;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod features;
pub mod fuse;
pub mod numfmt;
pub mod report;
pub mod rng;
pub mod textprep;
pub mod topics;

pub use cluster::{kmeans, pca_project, ClusterAssignment, Projection2D};
pub use corpus::{load_corpus, load_stopwords, Book, Corpus, Poem, StopwordSet};
pub use embed::{hash_provider, load_embedding_table, poem_embedding, EmbeddingProvider, EmbeddingTable};
pub use error::{Error, Result};
pub use features::{cosine_similarity, similarity_matrix, top_k_bow, trigram_bow, FeatureVector, Vocabulary};
pub use fuse::{build_fusion_input, encode, train_autoencoder, Autoencoder, TrainConfig};
pub use report::{run_pipeline, RunConfig};
pub use textprep::{preprocess_poem, PrepConfig, ReductionMode, TokenizedPoem};
pub use topics::{fit_lda, LdaConfig, TopicModel};
