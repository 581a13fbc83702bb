//! Verse normalization, tokenization, stop-word filtering and stem/lemma
//! reduction.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use unicode_general_category::{get_general_category, GeneralCategory};

use crate::corpus::{Poem, StopwordSet};
use crate::error::{Error, Result};

pub const ZWNJ: char = '\u{200c}';

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    ) || matches!(c, '،' | '؛' | '؟' | '«' | '»')
}

/// Folds Arabic yeh/kaf to their Persian forms, drops harakat, turns
/// punctuation into spaces and collapses whitespace. ZWNJ is kept.
pub fn normalize(text: &str) -> String {
    let mut mapped = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            'ي' => mapped.push('ی'),
            'ك' => mapped.push('ک'),
            '\u{064b}'..='\u{0652}' => {}
            c if is_punctuation(c) => mapped.push(' '),
            c => mapped.push(c),
        }
    }
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits a normalized verse on spaces.
pub fn tokenize(verse: &str) -> Vec<String> {
    verse
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>, stopwords: &StopwordSet) -> Vec<String> {
    tokens.into_iter().filter(|t| !stopwords.contains(t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReductionMode {
    #[default]
    Stem,
    Lemmatize,
    None,
}

impl FromStr for ReductionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stem" => Ok(Self::Stem),
            "lemmatize" | "lemma" => Ok(Self::Lemmatize),
            "none" => Ok(Self::None),
            other => Err(Error::InvalidInput(format!(
                "unknown reduction mode {other:?} (expected stem, lemmatize or none)"
            ))),
        }
    }
}

impl ReductionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stem => "stem",
            Self::Lemmatize => "lemmatize",
            Self::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrepConfig {
    pub stopwords: StopwordSet,
    pub reduction_mode: ReductionMode,
    pub lemma_dictionary: Option<HashMap<String, String>>,
}

impl PrepConfig {
    pub fn new(
        stopwords: StopwordSet,
        reduction_mode: ReductionMode,
        lemma_dictionary: Option<HashMap<String, String>>,
    ) -> Result<Self> {
        if reduction_mode == ReductionMode::Lemmatize && lemma_dictionary.is_none() {
            return Err(Error::InvalidInput(
                "lemmatize mode requires a lemma dictionary".into(),
            ));
        }
        Ok(Self {
            stopwords,
            reduction_mode,
            lemma_dictionary,
        })
    }

    /// Default stop words with the rule-based stemmer.
    pub fn stemming() -> Self {
        Self {
            stopwords: StopwordSet::default_persian(),
            reduction_mode: ReductionMode::Stem,
            lemma_dictionary: None,
        }
    }
}

/// Loads a `surface<TAB>lemma` dictionary. Both columns are normalized.
pub fn load_lemma_dictionary(path: &Path) -> Result<HashMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut dict = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(surface), Some(lemma), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::format(path, i + 1, "expected surface<TAB>lemma"));
        };
        let (surface, lemma) = (normalize(surface), normalize(lemma));
        if surface.is_empty() || lemma.is_empty() {
            return Err(Error::format(path, i + 1, "empty surface or lemma"));
        }
        dict.insert(surface, lemma);
    }
    Ok(dict)
}

const VERB_PREFIX: &str = "می\u{200c}";

const PLURAL_SUFFIXES: &[&str] = &["هایی", "ترین", "های", "ها", "تر"];

// Longest first. ZWNJ-attached enclitics carry the joiner so that
// "سایه‌ای" loses "‌ای" while "پرسشی" loses only the bare "ی".
const FINAL_SUFFIXES: &[&str] = &[
    "هایی", "ترین", "\u{200c}ای", "\u{200c}ام", "\u{200c}اش", "های", "مان", "تان", "شان",
    "\u{200c}ی", "ها", "تر", "م", "ت", "ش", "ی",
];

fn letter_count(s: &str) -> usize {
    s.chars().filter(|&c| c != ZWNJ).count()
}

/// Strips the first (longest) matching suffix whose removal leaves enough
/// of a stem: two letters, or three when the suffix is a single letter.
fn strip_one<'a>(token: &'a str, suffixes: &[&str]) -> Option<&'a str> {
    suffixes.iter().find_map(|suffix| {
        let rest = token.strip_suffix(suffix)?.trim_end_matches(ZWNJ);
        let min = if suffix.chars().count() == 1 { 3 } else { 2 };
        (letter_count(rest) >= min).then_some(rest)
    })
}

/// Rule-based stemmer: verbal prefix "می‌", then one suffix from the full
/// list, then at most one more plural/comparative suffix.
pub fn stem(token: &str) -> String {
    let mut current = token;
    if let Some(rest) = current.strip_prefix(VERB_PREFIX) {
        if letter_count(rest) >= 2 {
            current = rest;
        }
    }
    if let Some(rest) = strip_one(current, FINAL_SUFFIXES) {
        current = rest;
        if let Some(rest) = strip_one(current, PLURAL_SUFFIXES) {
            current = rest;
        }
    }
    current.to_owned()
}

pub fn reduce(token: &str, config: &PrepConfig) -> Result<String> {
    let reduced = match config.reduction_mode {
        ReductionMode::None => token.to_owned(),
        ReductionMode::Stem => stem(token),
        ReductionMode::Lemmatize => {
            let dict = config.lemma_dictionary.as_ref().ok_or_else(|| {
                Error::InvalidInput("lemmatize mode requires a lemma dictionary".into())
            })?;
            dict.get(token).cloned().unwrap_or_else(|| token.to_owned())
        }
    };
    Ok(if reduced.is_empty() {
        token.to_owned()
    } else {
        reduced
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedPoem {
    pub poem_index: usize,
    pub verses: Vec<Vec<String>>,
    pub flat_tokens: Vec<String>,
}

impl TokenizedPoem {
    pub fn from_verses(poem_index: usize, verses: Vec<Vec<String>>) -> Self {
        let flat_tokens = verses.iter().flatten().cloned().collect();
        Self {
            poem_index,
            verses,
            flat_tokens,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.flat_tokens.is_empty()
    }
}

fn preprocess_verse(verse: &str, config: &PrepConfig) -> Result<Vec<String>> {
    let tokens = remove_stopwords(tokenize(&normalize(verse)), &config.stopwords);
    let mut out = Vec::with_capacity(tokens.len());
    for token in tokens {
        let reduced = reduce(&token, config)?;
        if !config.stopwords.contains(&reduced) {
            out.push(reduced);
        }
    }
    Ok(out)
}

/// normalize → tokenize → drop stop words → reduce → drop stop words again.
/// Verses that end up empty stay in place as empty lists.
pub fn preprocess_poem(poem: &Poem, config: &PrepConfig) -> Result<TokenizedPoem> {
    let verses = poem
        .verses
        .iter()
        .map(|v| preprocess_verse(v, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(TokenizedPoem::from_verses(poem.index, verses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn folds_arabic_kaf_and_yeh() {
        assert_eq!(normalize("كتاب"), "کتاب");
        assert_eq!(normalize("علي"), "علی");
    }

    #[test]
    fn punctuation_and_whitespace() {
        assert_eq!(normalize("سلام،  دنیا"), "سلام دنیا");
        assert_eq!(normalize("«شعر» ؟ آری!"), "شعر آری");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("  \t "), "");
    }

    #[test]
    fn drops_harakat_keeps_zwnj() {
        assert_eq!(normalize("کِتابْ"), "کتاب");
        assert_eq!(normalize("سایه\u{200c}ای"), "سایه\u{200c}ای");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("سایه\u{200c}ای از پرسشی"),
            strs(&["سایه\u{200c}ای", "از", "پرسشی"])
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("الف ب الف"), strs(&["الف", "ب", "الف"]));
    }

    #[test]
    fn stopword_filter() {
        let set = StopwordSet::default_persian();
        assert_eq!(remove_stopwords(strs(&["بر", "لبانم"]), &set), strs(&["لبانم"]));
        assert!(remove_stopwords(vec![], &set).is_empty());
        assert_eq!(
            remove_stopwords(strs(&["لبانم", "مرموز"]), &set),
            strs(&["لبانم", "مرموز"])
        );
    }

    #[test]
    fn stem_examples() {
        assert_eq!(stem("سایه\u{200c}ای"), "سایه");
        assert_eq!(stem("کتاب"), "کتاب");
        assert_eq!(stem("پرسشی"), "پرسش");
        assert_eq!(stem("لبانم"), "لبان");
        assert_eq!(stem("مرموز"), "مرموز");
        assert_eq!(stem("کتاب\u{200c}ها"), "کتاب");
        assert_eq!(stem("کتاب\u{200c}هایی"), "کتاب");
        assert_eq!(stem("دخترهایشان"), "دختر");
        assert_eq!(stem("می\u{200c}خوانم"), "خوان");
    }

    #[test]
    fn stem_keeps_short_tokens() {
        assert_eq!(stem("دلم"), "دلم");
        assert_eq!(stem("ها"), "ها");
        assert_eq!(stem("می\u{200c}ر"), "می\u{200c}ر");
    }

    #[test]
    fn lemmatize_uses_dictionary() {
        let dict = HashMap::from([("دونده".to_owned(), "دو".to_owned())]);
        let config =
            PrepConfig::new(StopwordSet::default(), ReductionMode::Lemmatize, Some(dict)).unwrap();
        assert_eq!(reduce("دونده", &config).unwrap(), "دو");
        assert_eq!(reduce("کتاب", &config).unwrap(), "کتاب");
    }

    #[test]
    fn lemmatize_without_dictionary_errors() {
        assert!(PrepConfig::new(StopwordSet::default(), ReductionMode::Lemmatize, None).is_err());
        let config = PrepConfig {
            stopwords: StopwordSet::default(),
            reduction_mode: ReductionMode::Lemmatize,
            lemma_dictionary: None,
        };
        assert!(reduce("کتاب", &config).is_err());
    }

    #[test]
    fn worked_trigram_line() {
        let poem = Poem::new(0, "t", vec!["بر لبانم سایه‌ای از پرسشی مرموز".into()]);
        let tp = preprocess_poem(&poem, &PrepConfig::stemming()).unwrap();
        assert_eq!(tp.verses[0], strs(&["لبان", "سایه", "پرسش", "مرموز"]));
    }

    #[test]
    fn all_stopword_poem_keeps_empty_verses() {
        let poem = Poem::new(3, "t", vec!["از به در".into(), "که را".into()]);
        let tp = preprocess_poem(&poem, &PrepConfig::stemming()).unwrap();
        assert_eq!(tp.verses, vec![Vec::<String>::new(), vec![]]);
        assert!(tp.flat_tokens.is_empty());
        assert_eq!(tp.poem_index, 3);
    }

    #[test]
    fn identity_path() {
        let config = PrepConfig::new(StopwordSet::default(), ReductionMode::None, None).unwrap();
        let poem = Poem::new(0, "t", vec!["آب،  آتش  باد".into()]);
        let tp = preprocess_poem(&poem, &config).unwrap();
        assert_eq!(tp.flat_tokens, strs(&["آب", "آتش", "باد"]));
    }

    #[test]
    fn reduced_stopwords_are_dropped() {
        // "کن" is a stop word; "کن‌ها" only becomes one after stemming
        let poem = Poem::new(0, "t", vec!["کن\u{200c}ها باران".into()]);
        let tp = preprocess_poem(&poem, &PrepConfig::stemming()).unwrap();
        assert_eq!(tp.flat_tokens, strs(&["باران"]));
    }

    #[test]
    fn lemma_dictionary_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lemmas.tsv");
        fs::write(&p, "# surface\tlemma\nدونده\tدو\nكتابها\tکتاب\n").unwrap();
        let d = load_lemma_dictionary(&p).unwrap();
        assert_eq!(d["دونده"], "دو");
        assert_eq!(d["کتابها"], "کتاب");
        fs::write(&p, "bad line\n").unwrap();
        assert!(load_lemma_dictionary(&p).is_err());
    }

    fn persianish() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                Just("ا"), Just("ب"), Just("ی"), Just("ي"), Just("ك"), Just("ه"), Just("م"),
                Just("ش"), Just("ت"), Just("\u{200c}"), Just(" "), Just("،"), Just("\u{064e}"),
                Just("!"), Just("\t"), Just("ها"), Just("می\u{200c}"), Just("x"), Just("7"),
            ],
            0..30,
        )
        .prop_map(|parts| parts.concat())
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in persianish()) {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn stem_never_lengthens_or_empties(s in persianish()) {
            for tok in tokenize(&normalize(&s)) {
                let st = stem(&tok);
                prop_assert!(!st.is_empty());
                prop_assert!(st.chars().count() <= tok.chars().count());
            }
        }

        #[test]
        fn preprocess_conserves_verses(verses in proptest::collection::vec(persianish(), 1..6)) {
            let poem = Poem::new(0, "t", verses.clone());
            let config = PrepConfig::stemming();
            let tp = preprocess_poem(&poem, &config).unwrap();
            prop_assert_eq!(tp.verses.len(), verses.len());
            prop_assert_eq!(tp.verses.iter().map(Vec::len).sum::<usize>(), tp.flat_tokens.len());
            prop_assert!(tp.flat_tokens.iter().all(|t| !t.is_empty() && !config.stopwords.contains(t)));
        }
    }
}
