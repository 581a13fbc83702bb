//! Vocabularies, per-poem count vectors (top-k unigram and verse-scoped
//! n-gram bags of words) and cosine-similarity matrices.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::numfmt::sig9;
use crate::textprep::TokenizedPoem;

/// Ordered tuple of consecutive tokens inside one verse.
pub type Ngram = Vec<String>;

/// Terms in first-occurrence order with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary<T: Eq + Hash> {
    terms: Vec<T>,
    index: HashMap<T, usize>,
}

impl<T: Eq + Hash + Clone> Vocabulary<T> {
    pub fn from_terms<I: IntoIterator<Item = T>>(terms: I) -> Self {
        let mut vocab = Self {
            terms: Vec::new(),
            index: HashMap::new(),
        };
        for term in terms {
            vocab.insert(term);
        }
        vocab
    }

    fn insert(&mut self, term: T) -> usize {
        if let Some(&i) = self.index.get(&term) {
            return i;
        }
        let i = self.terms.len();
        self.index.insert(term.clone(), i);
        self.terms.push(term);
        i
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[T] {
        &self.terms
    }

    pub fn get(&self, term: &T) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, i: usize) -> Option<&T> {
        self.terms.get(i)
    }
}

/// Unigram vocabulary over all poems, in corpus order.
pub fn build_vocabulary(poems: &[TokenizedPoem]) -> Result<Vocabulary<String>> {
    let vocab = Vocabulary::from_terms(poems.iter().flat_map(|p| p.flat_tokens.iter().cloned()));
    if vocab.is_empty() {
        return Err(Error::InvalidInput("empty corpus vocabulary".into()));
    }
    Ok(vocab)
}

/// Vocabulary of verse-scoped n-grams over all poems.
pub fn build_ngram_vocabulary(poems: &[TokenizedPoem], n: usize) -> Result<Vocabulary<Ngram>> {
    let vocab = Vocabulary::from_terms(poems.iter().flat_map(|p| extract_ngrams(p, n)));
    if vocab.is_empty() {
        return Err(Error::InvalidInput(format!("no {n}-grams in corpus")));
    }
    Ok(vocab)
}

pub fn term_frequencies(poem: &TokenizedPoem) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for token in &poem.flat_tokens {
        *counts.entry(token.clone()).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub poem_index: usize,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Raw counts of the poem's `k` most frequent terms, zero elsewhere.
/// Equal counts are ranked by first occurrence in the poem.
pub fn top_k_bow(poem: &TokenizedPoem, vocab: &Vocabulary<String>, k: usize) -> Result<FeatureVector> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    // (vocab position, count) in first-occurrence order
    let mut counts: Vec<(usize, usize)> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for token in &poem.flat_tokens {
        let pos = vocab
            .get(token)
            .ok_or_else(|| Error::OutOfVocabulary(token.clone()))?;
        match slot.get(&pos) {
            Some(&s) => counts[s].1 += 1,
            None => {
                slot.insert(pos, counts.len());
                counts.push((pos, 1));
            }
        }
    }
    // stable sort keeps first-occurrence order among equal counts
    counts.sort_by_key(|c| std::cmp::Reverse(c.1));
    let mut values = vec![0.0; vocab.len()];
    for &(pos, count) in counts.iter().take(k) {
        values[pos] = count as f64;
    }
    Ok(FeatureVector {
        poem_index: poem.poem_index,
        values,
    })
}

/// Width-`n` windows inside each verse; no window crosses a verse boundary.
pub fn extract_ngrams(poem: &TokenizedPoem, n: usize) -> Vec<Ngram> {
    if n == 0 {
        return Vec::new();
    }
    poem.verses
        .iter()
        .flat_map(|verse| verse.windows(n).map(<[String]>::to_vec))
        .collect()
}

pub fn extract_trigrams(poem: &TokenizedPoem) -> Vec<Ngram> {
    extract_ngrams(poem, 3)
}

/// Histogram of the poem's n-grams over `vocab` (n taken from the vocabulary terms).
pub fn ngram_bow(poem: &TokenizedPoem, vocab: &Vocabulary<Ngram>, n: usize) -> Result<FeatureVector> {
    let mut values = vec![0.0; vocab.len()];
    for gram in extract_ngrams(poem, n) {
        let pos = vocab
            .get(&gram)
            .ok_or_else(|| Error::OutOfVocabulary(gram.join(" ")))?;
        values[pos] += 1.0;
    }
    Ok(FeatureVector {
        poem_index: poem.poem_index,
        values,
    })
}

pub fn trigram_bow(poem: &TokenizedPoem, vocab: &Vocabulary<Ngram>) -> Result<FeatureVector> {
    ngram_bow(poem, vocab, 3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub value: f64,
    /// Set when either vector is all-zero; `value` is then 0.
    pub degenerate: bool,
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<Cosine> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(Cosine {
            value: 0.0,
            degenerate: true,
        });
    }
    let value = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
    Ok(Cosine {
        value,
        degenerate: false,
    })
}

pub fn cosine_similarity(a: &FeatureVector, b: &FeatureVector) -> Result<Cosine> {
    cosine(&a.values, &b.values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub poem_order: Vec<usize>,
    /// Row-major `n × n`.
    pub values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.poem_order.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.values[i * n..(i + 1) * n]
    }

    /// CSV with a header of poem indices; 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("poem_index");
        for p in &self.poem_order {
            write!(out, ",{p}").unwrap();
        }
        out.push('\n');
        for (i, p) in self.poem_order.iter().enumerate() {
            write!(out, "{p}").unwrap();
            for v in self.row(i) {
                write!(out, ",{}", sig9(*v)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise cosine over the upper triangle, mirrored.
pub fn similarity_matrix(vectors: &[FeatureVector]) -> Result<SimilarityMatrix> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::InvalidInput("no vectors".into()));
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let c = if i == j {
                // exact 1 on the diagonal, 0 for empty poems
                let c = cosine_similarity(&vectors[i], &vectors[j])?;
                if c.degenerate { 0.0 } else { 1.0 }
            } else {
                cosine_similarity(&vectors[i], &vectors[j])?.value
            };
            values[i * n + j] = c;
            values[j * n + i] = c;
        }
    }
    Ok(SimilarityMatrix {
        poem_order: vectors.iter().map(|v| v.poem_index).collect(),
        values,
    })
}

/// Feature matrix as CSV: one row per term, one column per poem.
pub fn features_to_csv(vectors: &[FeatureVector], term_labels: &[String]) -> Result<String> {
    let mut out = String::from("term");
    for v in vectors {
        if v.len() != term_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: term_labels.len(),
                actual: v.len(),
            });
        }
        write!(out, ",{}", v.poem_index).unwrap();
    }
    out.push('\n');
    for (j, label) in term_labels.iter().enumerate() {
        out.push_str(&csv_field(label));
        for v in vectors {
            write!(out, ",{}", sig9(v.values[j])).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poem(index: usize, verses: &[&[&str]]) -> TokenizedPoem {
        TokenizedPoem::from_verses(
            index,
            verses
                .iter()
                .map(|v| v.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    fn s(x: &str) -> String {
        x.to_owned()
    }

    #[test]
    fn vocabulary_first_occurrence() {
        let v = build_vocabulary(&[poem(0, &[&["a", "b"]]), poem(1, &[&["b", "c"]])]).unwrap();
        assert_eq!(v.terms(), &[s("a"), s("b"), s("c")]);
        let v = build_vocabulary(&[poem(0, &[&["x", "x", "x"]])]).unwrap();
        assert_eq!(v.terms(), &[s("x")]);
    }

    #[test]
    fn empty_vocabulary_errors() {
        let err = build_vocabulary(&[poem(0, &[&[]])]).unwrap_err();
        assert!(err.to_string().contains("empty corpus vocabulary"));
    }

    #[test]
    fn frequencies() {
        let f = term_frequencies(&poem(0, &[&["a", "b", "a"]]));
        assert_eq!(f[&s("a")], 2);
        assert_eq!(f[&s("b")], 1);
        assert!(term_frequencies(&poem(0, &[])).is_empty());
    }

    fn repeated(counts: &[(&str, usize)]) -> TokenizedPoem {
        let tokens: Vec<&str> = counts
            .iter()
            .flat_map(|&(t, c)| std::iter::repeat(t).take(c))
            .collect();
        poem(0, &[&tokens])
    }

    #[test]
    fn top_k_rank_rule() {
        let p = repeated(&[("a", 5), ("b", 4), ("c", 3), ("d", 2), ("e", 2), ("f", 1)]);
        let v = build_vocabulary(std::slice::from_ref(&p)).unwrap();
        let fv = top_k_bow(&p, &v, 5).unwrap();
        assert_eq!(fv.values, vec![5.0, 4.0, 3.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn top_k_ties_by_first_occurrence() {
        // order of first occurrence: a, f, c, e, b, d
        let p = poem(0, &[&["a", "f", "c", "a", "e", "b", "d", "a", "f", "c", "e", "b", "d"]]);
        let v = Vocabulary::from_terms(["a", "b", "c", "d", "e", "f"].map(s));
        let fv = top_k_bow(&p, &v, 5).unwrap();
        // a=3, then the four earliest of the count-2 terms: f, c, e, b; d is dropped
        assert_eq!(fv.values, vec![3.0, 2.0, 2.0, 0.0, 2.0, 2.0]);
    }

    #[test]
    fn top_k_fewer_terms_than_k() {
        let p = poem(0, &[&["a", "b", "a"]]);
        let v = Vocabulary::from_terms(["a", "b", "c"].map(s));
        let fv = top_k_bow(&p, &v, 5).unwrap();
        assert_eq!(fv.values.iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn top_k_out_of_vocabulary() {
        let p = poem(0, &[&["zz"]]);
        let v = Vocabulary::from_terms([s("a")]);
        assert!(matches!(top_k_bow(&p, &v, 5), Err(Error::OutOfVocabulary(_))));
    }

    #[test]
    fn trigrams_stay_in_verse() {
        let p = poem(0, &[&["a", "b", "c"], &["d", "e", "f"]]);
        let grams = extract_trigrams(&p);
        assert_eq!(grams, vec![vec![s("a"), s("b"), s("c")], vec![s("d"), s("e"), s("f")]]);
        assert!(extract_trigrams(&poem(0, &[&["a", "b"]])).is_empty());
    }

    #[test]
    fn worked_trigram() {
        let p = poem(0, &[&["لبان", "سایه", "پرسش", "مرموز"]]);
        assert!(extract_trigrams(&p).contains(&vec![s("سایه"), s("پرسش"), s("مرموز")]));
    }

    #[test]
    fn trigram_counts() {
        let p = poem(0, &[&["a", "b", "c"], &["x"], &["a", "b", "c"]]);
        let v = build_ngram_vocabulary(std::slice::from_ref(&p), 3).unwrap();
        let fv = trigram_bow(&p, &v).unwrap();
        assert_eq!(fv.values, vec![2.0]);
        let short = poem(1, &[&["a", "b"], &["c"]]);
        assert!(trigram_bow(&short, &v).unwrap().is_zero());
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap().value, 0.0);
        assert!((cosine(&[2.0, 0.0], &[4.0, 0.0]).unwrap().value - 1.0).abs() < 1e-15);
        let c = cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap().value;
        assert!((c - 32.0 / 1078f64.sqrt()).abs() < 1e-15);
        assert!((c - 0.974_631_846).abs() < 1e-9);
    }

    #[test]
    fn cosine_degenerate_and_mismatch() {
        let c = cosine(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.value, 0.0);
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn small_matrices() {
        let fv = |i, v: Vec<f64>| FeatureVector { poem_index: i, values: v };
        let m = similarity_matrix(&[fv(0, vec![3.0, 1.0])]).unwrap();
        assert_eq!(m.values, vec![1.0]);
        let m = similarity_matrix(&[fv(0, vec![1.0, 0.0]), fv(1, vec![0.0, 2.0])]).unwrap();
        assert_eq!(m.values, vec![1.0, 0.0, 0.0, 1.0]);
        let m = similarity_matrix(&[fv(0, vec![0.0, 0.0]), fv(1, vec![0.0, 2.0])]).unwrap();
        assert_eq!(m.values, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn similarity_csv_layout() {
        let fv = |i, v: Vec<f64>| FeatureVector { poem_index: i, values: v };
        let m = similarity_matrix(&[fv(0, vec![1.0, 2.0, 3.0]), fv(1, vec![4.0, 5.0, 6.0])]).unwrap();
        assert_eq!(
            m.to_csv(),
            "poem_index,0,1\n0,1,0.974631846\n1,0.974631846,1\n"
        );
    }

    #[test]
    fn feature_csv_layout() {
        let fv = |i, v: Vec<f64>| FeatureVector { poem_index: i, values: v };
        let csv = features_to_csv(&[fv(0, vec![1.0, 0.0]), fv(1, vec![0.5, 2.0])], &[s("a"), s("b,c")]).unwrap();
        assert_eq!(csv, "term,0,1\na,1,0.5\n\"b,c\",0,2\n");
    }

    fn token_poems() -> impl Strategy<Value = Vec<TokenizedPoem>> {
        let verse = proptest::collection::vec(prop_oneof![Just("a"), Just("b"), Just("c"), Just("d"), Just("e"), Just("f"), Just("g")], 0..8);
        let p = proptest::collection::vec(verse, 1..5);
        proptest::collection::vec(p, 1..6).prop_map(|ps| {
            ps.into_iter()
                .enumerate()
                .map(|(i, vs)| {
                    TokenizedPoem::from_verses(i, vs.into_iter().map(|v| v.into_iter().map(String::from).collect()).collect())
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn vocabulary_round_trip(poems in token_poems()) {
            if let Ok(v) = build_vocabulary(&poems) {
                for (i, t) in v.terms().iter().enumerate() {
                    prop_assert_eq!(v.get(t), Some(i));
                }
            }
        }

        #[test]
        fn top_k_nonzeros_match_frequencies(poems in token_poems(), k in 1usize..7) {
            if let Ok(v) = build_vocabulary(&poems) {
                for p in &poems {
                    let fv = top_k_bow(p, &v, k).unwrap();
                    let tf = term_frequencies(p);
                    let nz: Vec<_> = fv.values.iter().enumerate().filter(|(_, x)| **x != 0.0).collect();
                    prop_assert!(nz.len() <= k);
                    for (j, x) in nz {
                        prop_assert_eq!(*x, tf[&v.terms()[j]] as f64);
                    }
                }
            }
        }

        #[test]
        fn trigram_count_formula(poems in token_poems()) {
            for p in &poems {
                let expected: usize = p.verses.iter().map(|v| v.len().saturating_sub(2)).sum();
                prop_assert_eq!(extract_trigrams(p).len(), expected);
            }
        }

        #[test]
        fn cosine_scale_invariant(a in proptest::collection::vec(-5.0f64..5.0, 1..20), c in 0.001f64..1000.0) {
            let b: Vec<f64> = a.iter().rev().map(|x| x + 0.5).collect();
            let scaled: Vec<f64> = a.iter().map(|x| x * c).collect();
            let s1 = cosine(&a, &b).unwrap().value;
            let s2 = cosine(&scaled, &b).unwrap().value;
            prop_assert!((s1 - s2).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&s1));
        }
    }
}
