//! Run configuration, pipeline orchestration and SVG/CSV artifact emission.

mod config;
mod pipeline;
mod svg;
mod wordcloud;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub use config::{EmbeddingSource, FeatureMode, RunConfig, DEFAULT_SEED};
pub use pipeline::{book_dir, run_pipeline, run_tasks, Artifact, ArtifactKind, ReportBundle, Tasks};
pub use svg::{render_heatmap, render_histogram, render_scatter, top_terms, PALETTE};
pub use wordcloud::{layout_wordcloud, render_wordcloud, CloudOptions, PlacedWord};

use crate::cluster::{ClusterAssignment, Projection2D};
use crate::error::{Error, Result};
use crate::features::SimilarityMatrix;

fn write(path: &Path, svg: String) -> Result<()> {
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

pub fn emit_histogram(frequencies: &BTreeMap<String, usize>, top_n: usize, path: &Path) -> Result<()> {
    write(path, render_histogram(frequencies, top_n)?)
}

pub fn emit_wordcloud(frequencies: &BTreeMap<String, usize>, path: &Path) -> Result<()> {
    let weights: Vec<(String, f64)> = frequencies.iter().map(|(t, &c)| (t.clone(), c as f64)).collect();
    write(path, render_wordcloud(&weights, &CloudOptions::default())?)
}

pub fn emit_heatmap(matrix: &SimilarityMatrix, path: &Path) -> Result<()> {
    write(path, render_heatmap(matrix))
}

pub fn emit_scatter(
    projection: &Projection2D,
    labels: &ClusterAssignment,
    poem_indices: &[usize],
    titles: &[String],
    path: &Path,
) -> Result<()> {
    write(path, render_scatter(projection, labels, poem_indices, titles)?)
}
