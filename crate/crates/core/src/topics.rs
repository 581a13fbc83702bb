//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.
//!
//! Documents are poems. Each token starts with a uniformly random topic;
//! every sweep then visits tokens in (document, position) order, removes the
//! token from the counts, and draws a new topic with probability
//!
//! ```text
//! (n_dk + alpha) * (n_kw + beta) / (n_k + V * beta)
//! ```
//!
//! Sampling stops after `max_sweeps` or once the relative change of the
//! corpus log-likelihood stays below `ll_tolerance` for five sweeps in a row.
//! Randomness comes from one ChaCha stream per document, keyed by the poem
//! index, so a document's draws do not depend on where it sits in the list.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::features::Vocabulary;
use crate::numfmt::{exact, sig9};
use crate::rng::SeededRng;
use crate::textprep::TokenizedPoem;

const PLATEAU_PATIENCE: usize = 5;
const FORMAT_TAG: &str = "poemscope-lda 1";

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub max_sweeps: usize,
    /// Relative log-likelihood change counted as a plateau.
    pub ll_tolerance: f64,
    pub seed: u64,
}

impl LdaConfig {
    /// `alpha = 50 / k`, `beta = 0.01`, 1000 sweeps, tolerance 1e-4, seed 42.
    pub fn with_topics(k: usize) -> Self {
        Self {
            k,
            alpha: 50.0 / k.max(1) as f64,
            beta: 0.01,
            max_sweeps: 1000,
            ll_tolerance: 1e-4,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("LDA needs k >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidInput("Dirichlet priors must be > 0".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidInput("max_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self::with_topics(4)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub vocab_size: usize,
    /// Poem index of each document row.
    pub doc_ids: Vec<usize>,
    /// `D × k`
    pub theta: Vec<Vec<f64>>,
    /// `k × V`
    pub phi: Vec<Vec<f64>>,
    pub assignments: Vec<Vec<usize>>,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations_run: usize,
    /// Log-likelihood after each sweep.
    pub ll_trace: Vec<f64>,
}

struct Sampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    n_dk: Vec<Vec<u32>>,
    n_kw: Vec<Vec<u32>>,
    n_k: Vec<u32>,
    rngs: Vec<SeededRng>,
}

impl Sampler {
    fn new(docs: Vec<Vec<usize>>, doc_ids: &[usize], v: usize, config: &LdaConfig) -> Self {
        let k = config.k;
        let mut rngs: Vec<SeededRng> = doc_ids
            .iter()
            .map(|&id| SeededRng::with_stream(config.seed, id as u64))
            .collect();
        let mut n_dk = vec![vec![0u32; k]; docs.len()];
        let mut n_kw = vec![vec![0u32; v]; k];
        let mut n_k = vec![0u32; k];
        let z = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rngs[d].below(k);
                        n_dk[d][t] += 1;
                        n_kw[t][w] += 1;
                        n_k[t] += 1;
                        t
                    })
                    .collect()
            })
            .collect();
        Self {
            k,
            v,
            alpha: config.alpha,
            beta: config.beta,
            docs,
            z,
            n_dk,
            n_kw,
            n_k,
            rngs,
        }
    }

    fn sweep(&mut self, weights: &mut [f64]) {
        let vbeta = self.v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.z[d][i];
                self.n_dk[d][old] -= 1;
                self.n_kw[old][w] -= 1;
                self.n_k[old] -= 1;
                for (t, slot) in weights.iter_mut().enumerate() {
                    *slot = (self.n_dk[d][t] as f64 + self.alpha)
                        * (self.n_kw[t][w] as f64 + self.beta)
                        / (self.n_k[t] as f64 + vbeta);
                }
                let new = self.rngs[d].weighted_index(weights);
                self.z[d][i] = new;
                self.n_dk[d][new] += 1;
                self.n_kw[new][w] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    fn theta(&self) -> Vec<Vec<f64>> {
        let ka = self.k as f64 * self.alpha;
        self.docs
            .iter()
            .zip(&self.n_dk)
            .map(|(doc, counts)| {
                let denom = doc.len() as f64 + ka;
                counts.iter().map(|&c| (c as f64 + self.alpha) / denom).collect()
            })
            .collect()
    }

    fn phi(&self) -> Vec<Vec<f64>> {
        let vbeta = self.v as f64 * self.beta;
        self.n_kw
            .iter()
            .zip(&self.n_k)
            .map(|(row, &total)| {
                let denom = total as f64 + vbeta;
                row.iter().map(|&c| (c as f64 + self.beta) / denom).collect()
            })
            .collect()
    }

    #[cfg(test)]
    fn counts_consistent(&self) -> bool {
        let docs_ok = self
            .docs
            .iter()
            .zip(&self.n_dk)
            .all(|(doc, c)| c.iter().map(|&x| x as usize).sum::<usize>() == doc.len());
        let total: usize = self.docs.iter().map(Vec::len).sum();
        let words: usize = self.n_kw.iter().flatten().map(|&x| x as usize).sum();
        let topics: usize = self.n_k.iter().map(|&x| x as usize).sum();
        docs_ok && words == total && topics == total
    }
}

fn corpus_ll(docs: &[Vec<usize>], theta: &[Vec<f64>], phi: &[Vec<f64>]) -> f64 {
    let mut ll = 0.0;
    for (doc, th) in docs.iter().zip(theta) {
        for &w in doc {
            let p: f64 = th.iter().zip(phi).map(|(a, row)| a * row[w]).sum();
            ll += p.ln();
        }
    }
    ll
}

fn encode_docs(poems: &[TokenizedPoem], vocab: &Vocabulary<String>) -> Result<Vec<Vec<usize>>> {
    poems
        .iter()
        .map(|p| {
            p.flat_tokens
                .iter()
                .map(|t| vocab.get(t).ok_or_else(|| Error::OutOfVocabulary(t.clone())))
                .collect()
        })
        .collect()
}

pub fn fit_lda(
    poems: &[TokenizedPoem],
    vocab: &Vocabulary<String>,
    config: &LdaConfig,
) -> Result<TopicModel> {
    config.validate()?;
    let docs = encode_docs(poems, vocab)?;
    if docs.iter().all(Vec::is_empty) {
        return Err(Error::InvalidInput("empty corpus".into()));
    }
    let doc_ids: Vec<usize> = poems.iter().map(|p| p.poem_index).collect();
    let mut sampler = Sampler::new(docs, &doc_ids, vocab.len(), config);
    let mut weights = vec![0.0; config.k];
    let mut trace = Vec::new();
    let mut flat_run = 0;
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sampler.sweep(&mut weights);
        sweeps += 1;
        let ll = corpus_ll(&sampler.docs, &sampler.theta(), &sampler.phi());
        if let Some(&prev) = trace.last() {
            let rel = ((ll - prev) / f64::abs(prev)).abs();
            flat_run = if rel < config.ll_tolerance { flat_run + 1 } else { 0 };
        }
        trace.push(ll);
        if flat_run >= PLATEAU_PATIENCE {
            break;
        }
    }
    log::debug!("lda: k={} sweeps={} ll={:?}", config.k, sweeps, trace.last());
    Ok(TopicModel {
        k: config.k,
        vocab_size: vocab.len(),
        doc_ids,
        theta: sampler.theta(),
        phi: sampler.phi(),
        assignments: sampler.z,
        alpha: config.alpha,
        beta: config.beta,
        seed: config.seed,
        iterations_run: sweeps,
        ll_trace: trace,
    })
}

pub fn doc_topic_vector(model: &TopicModel, d: usize) -> Result<&[f64]> {
    model
        .theta
        .get(d)
        .map(Vec::as_slice)
        .ok_or(Error::OutOfRange {
            index: d,
            len: model.theta.len(),
        })
}

/// The `n` most probable terms of topic `t`; equal probabilities keep vocabulary order.
pub fn topic_top_words(
    model: &TopicModel,
    vocab: &Vocabulary<String>,
    t: usize,
    n: usize,
) -> Result<Vec<String>> {
    let row = model.phi.get(t).ok_or(Error::OutOfRange {
        index: t,
        len: model.k,
    })?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if row.len() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: row.len(),
            actual: vocab.len(),
        });
    }
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    Ok(order
        .into_iter()
        .take(n)
        .map(|i| vocab.terms()[i].clone())
        .collect())
}

/// Sum over tokens of `ln Σ_t theta_dt · phi_tw`.
pub fn log_likelihood(
    model: &TopicModel,
    poems: &[TokenizedPoem],
    vocab: &Vocabulary<String>,
) -> Result<f64> {
    if poems.len() != model.theta.len() {
        return Err(Error::DimensionMismatch {
            expected: model.theta.len(),
            actual: poems.len(),
        });
    }
    let docs = encode_docs(poems, vocab)?;
    Ok(corpus_ll(&docs, &model.theta, &model.phi))
}

impl TopicModel {
    /// `poem_index,topic0,...` with 9 significant digits.
    pub fn theta_csv(&self) -> String {
        let mut out = String::from("poem_index");
        for t in 0..self.k {
            write!(out, ",topic{t}").unwrap();
        }
        out.push('\n');
        for (id, row) in self.doc_ids.iter().zip(&self.theta) {
            write!(out, "{id}").unwrap();
            for v in row {
                write!(out, ",{}", sig9(*v)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Versioned text form: header fields, then theta and phi rows with
    /// round-trip float formatting. Token assignments are not stored.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_TAG}").unwrap();
        writeln!(out, "k\t{}", self.k).unwrap();
        writeln!(out, "vocab\t{}", self.vocab_size).unwrap();
        writeln!(out, "docs\t{}", self.theta.len()).unwrap();
        writeln!(out, "alpha\t{}", exact(self.alpha)).unwrap();
        writeln!(out, "beta\t{}", exact(self.beta)).unwrap();
        writeln!(out, "seed\t{}", self.seed).unwrap();
        writeln!(out, "sweeps\t{}", self.iterations_run).unwrap();
        let ids: Vec<String> = self.doc_ids.iter().map(usize::to_string).collect();
        writeln!(out, "doc_ids\t{}", ids.join("\t")).unwrap();
        writeln!(out, "theta").unwrap();
        write_rows(&mut out, &self.theta);
        writeln!(out, "phi").unwrap();
        write_rows(&mut out, &self.phi);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let path = std::path::Path::new("<lda model>");
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::format(path, 0, format!("missing {what}")))
        };
        let (_, tag) = next("header")?;
        if tag != FORMAT_TAG {
            return Err(Error::format(path, 1, "unknown model format"));
        }
        let mut field = |name: &str| -> Result<(usize, String)> {
            let (i, line) = next(name)?;
            let value = line
                .strip_prefix(name)
                .and_then(|r| r.strip_prefix('\t'))
                .ok_or_else(|| Error::format(path, i + 1, format!("expected {name}")))?;
            Ok((i + 1, value.to_owned()))
        };
        let parse_usize = |(line, s): (usize, String)| {
            s.parse::<usize>()
                .map_err(|_| Error::format(path, line, "bad integer"))
        };
        let parse_f64 = |(line, s): (usize, String)| {
            s.parse::<f64>().map_err(|_| Error::format(path, line, "bad number"))
        };
        let k = parse_usize(field("k")?)?;
        let vocab_size = parse_usize(field("vocab")?)?;
        let docs = parse_usize(field("docs")?)?;
        let alpha = parse_f64(field("alpha")?)?;
        let beta = parse_f64(field("beta")?)?;
        let (line, seed) = field("seed")?;
        let seed = seed
            .parse::<u64>()
            .map_err(|_| Error::format(path, line, "bad seed"))?;
        let iterations_run = parse_usize(field("sweeps")?)?;
        let (line, ids) = field("doc_ids")?;
        let doc_ids = ids
            .split('\t')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|_| Error::format(path, line, "bad doc id")))
            .collect::<Result<Vec<_>>>()?;
        let rest: Vec<&str> = text.lines().skip(9).collect();
        let theta = read_block(&rest, "theta", docs, k, path)?;
        let phi = read_block(&rest[docs + 1..], "phi", k, vocab_size, path)?;
        Ok(Self {
            k,
            vocab_size,
            doc_ids,
            theta,
            phi,
            assignments: Vec::new(),
            alpha,
            beta,
            seed,
            iterations_run,
            ll_trace: Vec::new(),
        })
    }
}

fn write_rows(out: &mut String, rows: &[Vec<f64>]) {
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| exact(*v)).collect();
        writeln!(out, "{}", cells.join("\t")).unwrap();
    }
}

fn read_block(
    lines: &[&str],
    name: &str,
    rows: usize,
    cols: usize,
    path: &std::path::Path,
) -> Result<Vec<Vec<f64>>> {
    if lines.first() != Some(&name) || lines.len() < rows + 1 {
        return Err(Error::format(path, 0, format!("missing {name} block")));
    }
    lines[1..=rows]
        .iter()
        .map(|l| {
            let row = l
                .split('\t')
                .map(|c| c.parse::<f64>().map_err(|_| Error::format(path, 0, "bad number")))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != cols {
                return Err(Error::format(path, 0, format!("{name} row arity")));
            }
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::build_vocabulary;

    fn poem(i: usize, tokens: &[&str]) -> TokenizedPoem {
        TokenizedPoem::from_verses(i, vec![tokens.iter().map(|s| s.to_string()).collect()])
    }

    fn small_corpus() -> Vec<TokenizedPoem> {
        vec![
            poem(0, &["a", "b", "a", "c"]),
            poem(1, &["d", "e", "d"]),
            poem(2, &["a", "c", "e", "b"]),
            poem(3, &[]),
        ]
    }

    #[test]
    fn single_topic_collapses() {
        let poems = small_corpus();
        let vocab = build_vocabulary(&poems).unwrap();
        let model = fit_lda(&poems, &vocab, &LdaConfig::with_topics(1)).unwrap();
        for row in &model.theta {
            assert_eq!(row, &vec![1.0]);
        }
        // smoothed unigram distribution
        let total = 11.0;
        let vb = vocab.len() as f64 * 0.01;
        for (w, term) in vocab.terms().iter().enumerate() {
            let n = poems
                .iter()
                .flat_map(|p| &p.flat_tokens)
                .filter(|t| *t == term)
                .count() as f64;
            assert!((model.phi[0][w] - (n + 0.01) / (total + vb)).abs() < 1e-15);
        }
    }

    #[test]
    fn rows_are_distributions() {
        let poems = small_corpus();
        let vocab = build_vocabulary(&poems).unwrap();
        let model = fit_lda(&poems, &vocab, &LdaConfig::default()).unwrap();
        for row in model.theta.iter().chain(&model.phi) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&x| x > 0.0));
        }
        assert!(model.assignments.iter().flatten().all(|&t| t < 4));
    }

    #[test]
    fn counts_conserved_every_sweep() {
        let poems = small_corpus();
        let vocab = build_vocabulary(&poems).unwrap();
        let docs = encode_docs(&poems, &vocab).unwrap();
        let config = LdaConfig::with_topics(3);
        let mut s = Sampler::new(docs, &[0, 1, 2, 3], vocab.len(), &config);
        let mut w = vec![0.0; 3];
        assert!(s.counts_consistent());
        for _ in 0..20 {
            s.sweep(&mut w);
            assert!(s.counts_consistent());
        }
    }

    #[test]
    fn deterministic() {
        let poems = small_corpus();
        let vocab = build_vocabulary(&poems).unwrap();
        let a = fit_lda(&poems, &vocab, &LdaConfig::default()).unwrap();
        let b = fit_lda(&poems, &vocab, &LdaConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors() {
        let vocab = Vocabulary::from_terms(["a".to_owned()]);
        assert!(fit_lda(&[poem(0, &[])], &vocab, &LdaConfig::default()).is_err());
        assert!(matches!(
            fit_lda(&[poem(0, &["zz"])], &vocab, &LdaConfig::default()),
            Err(Error::OutOfVocabulary(_))
        ));
        let mut bad = LdaConfig::default();
        bad.k = 0;
        assert!(fit_lda(&[poem(0, &["a"])], &vocab, &bad).is_err());
    }

    #[test]
    fn doc_vector_bounds() {
        let poems = small_corpus();
        let vocab = build_vocabulary(&poems).unwrap();
        let model = fit_lda(&poems, &vocab, &LdaConfig::default()).unwrap();
        let v = doc_topic_vector(&model, 0).unwrap();
        assert_eq!(v.len(), 4);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(doc_topic_vector(&model, 4).is_err());
        let m1 = fit_lda(&poems, &vocab, &LdaConfig::with_topics(1)).unwrap();
        assert_eq!(doc_topic_vector(&m1, 2).unwrap(), &[1.0]);
    }

    #[test]
    fn top_words_order_and_clamp() {
        let vocab = Vocabulary::from_terms(["x", "y", "z"].map(String::from));
        let model = TopicModel {
            k: 1,
            vocab_size: 3,
            doc_ids: vec![0],
            theta: vec![vec![1.0]],
            phi: vec![vec![0.5, 0.3, 0.2]],
            assignments: vec![],
            alpha: 1.0,
            beta: 0.01,
            seed: 0,
            iterations_run: 0,
            ll_trace: vec![],
        };
        assert_eq!(topic_top_words(&model, &vocab, 0, 2).unwrap(), vec!["x", "y"]);
        assert_eq!(topic_top_words(&model, &vocab, 0, 10).unwrap(), vec!["x", "y", "z"]);
        assert!(topic_top_words(&model, &vocab, 1, 2).is_err());
        assert!(topic_top_words(&model, &vocab, 0, 0).is_err());
    }

    #[test]
    fn likelihood_single_token() {
        let poems = vec![poem(0, &["w"])];
        let vocab = build_vocabulary(&poems).unwrap();
        let model = fit_lda(&poems, &vocab, &LdaConfig::with_topics(1)).unwrap();
        let ll = log_likelihood(&model, &poems, &vocab).unwrap();
        assert_eq!(ll, model.phi[0][0].ln());
        assert!(ll.is_finite() && ll <= 0.0);
    }

    #[test]
    fn text_round_trip() {
        let poems = small_corpus();
        let vocab = build_vocabulary(&poems).unwrap();
        let model = fit_lda(&poems, &vocab, &LdaConfig::default()).unwrap();
        let back = TopicModel::from_text(&model.to_text()).unwrap();
        assert_eq!(back.theta, model.theta);
        assert_eq!(back.phi, model.phi);
        assert_eq!(back.doc_ids, model.doc_ids);
        assert_eq!(back.iterations_run, model.iterations_run);
        assert!(model.theta_csv().starts_with("poem_index,topic0,topic1,topic2,topic3\n0,"));
    }
}
