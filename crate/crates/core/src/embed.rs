//! Token vectors and mean-pooled poem embeddings.
//!
//! Table file format (UTF-8): optional `#` comment lines, a header
//! `dim<TAB>D`, then one `token<TAB>v1<TAB>…<TAB>vD` row per token.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numfmt::exact;
use crate::rng::SeededRng;
use crate::textprep::TokenizedPoem;

pub const DEFAULT_DIM: usize = 768;

/// Anything that can map a token to a fixed-width vector.
pub trait EmbeddingProvider {
    fn dim(&self) -> usize;
    fn vector(&self, token: &str) -> Option<Cow<'_, [f64]>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dim must be >= 1".into()));
        }
        Ok(Self {
            dim,
            vectors: BTreeMap::new(),
        })
    }

    /// Inserts or replaces a token vector.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<Option<Vec<f64>>> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        Ok(self.vectors.insert(token.into(), vector))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let (header_line, header) = lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
            .ok_or_else(|| Error::format(path, 1, "missing header"))?;
        let dim = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["dim", d] => d
                .parse::<usize>()
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| Error::format(path, header_line, "malformed header"))?,
            _ => return Err(Error::format(path, header_line, "malformed header")),
        };
        let mut table = Self::new(dim)?;
        for (line_no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(['\t', ' ']).filter(|c| !c.is_empty()).collect();
            if cells.len() != dim + 1 {
                return Err(Error::format(
                    path,
                    line_no,
                    format!("row arity {} (expected {})", cells.len(), dim + 1),
                ));
            }
            let vector = cells[1..]
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::format(path, line_no, format!("non-numeric cell {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if table.insert(cells[0], vector)?.is_some() {
                log::warn!("{}:{}: duplicate token {:?}, keeping the last row", path.display(), line_no, cells[0]);
            }
        }
        Ok(table)
    }

    /// Canonical text form: tokens in code-point order, shortest round-trip floats.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("dim\t{}\n", self.dim);
        for (token, v) in &self.vectors {
            out.push_str(token);
            for x in v {
                write!(out, "\t{}", exact(*x)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

impl EmbeddingProvider for EmbeddingTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        self.get(token).map(Cow::Borrowed)
    }
}

pub fn load_embedding_table(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::parse(&text, path)
}

/// Deterministic stand-in for a language model: each token maps to a unit
/// vector whose coordinates are uniform draws keyed by SHA-256(seed ‖ token).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashProvider {
    dim: usize,
    seed: u64,
}

pub fn hash_provider(dim: usize, seed: u64) -> Result<HashProvider> {
    if dim == 0 {
        return Err(Error::InvalidInput("embedding dim must be >= 1".into()));
    }
    Ok(HashProvider { dim, seed })
}

impl HashProvider {
    pub fn embed(&self, token: &str) -> Vec<f64> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(token.as_bytes());
        let mut rng = SeededRng::from_key(hasher.finalize().into());
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        } else {
            v[0] = 1.0;
        }
        v
    }

    /// Materializes vectors for `tokens` as a table.
    pub fn table_for<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> EmbeddingTable {
        let mut table = EmbeddingTable::new(self.dim).expect("dim checked at construction");
        for token in tokens {
            table.insert(token, self.embed(token)).expect("dim matches");
        }
        table
    }
}

impl EmbeddingProvider for HashProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        Some(Cow::Owned(self.embed(token)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoemEmbedding {
    pub poem_index: usize,
    pub vector: Vec<f64>,
    pub covered_tokens: usize,
    pub oov_tokens: usize,
}

/// Mean of the vectors of all covered tokens (with multiplicity). Tokens the
/// provider does not know are skipped and counted.
pub fn poem_embedding(poem: &TokenizedPoem, provider: &dyn EmbeddingProvider) -> PoemEmbedding {
    let mut sum = vec![0.0; provider.dim()];
    let mut covered = 0;
    for token in &poem.flat_tokens {
        if let Some(v) = provider.vector(token) {
            for (s, x) in sum.iter_mut().zip(v.iter()) {
                *s += x;
            }
            covered += 1;
        }
    }
    if covered > 0 {
        let n = covered as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    PoemEmbedding {
        poem_index: poem.poem_index,
        vector: sum,
        covered_tokens: covered,
        oov_tokens: poem.flat_tokens.len() - covered,
    }
}
