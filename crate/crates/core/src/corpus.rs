//! Corpus model (books → poems → verses) and stop-word configuration.
//!
//! On disk a corpus is a directory with one subdirectory per book and one
//! UTF-8 `.txt` file per poem. The first non-empty line of a poem file is
//! its title; each remaining non-empty line is a verse. Books are ordered by
//! directory name and poems by file name, and poem indices follow that order.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::textprep::normalize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub corpus_id: String,
    pub books: Vec<Book>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Book {
    pub title: String,
    pub poems: Vec<Poem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poem {
    pub index: usize,
    pub title: String,
    pub verses: Vec<String>,
}

impl Corpus {
    /// Builds a corpus from in-memory books, checking the structural invariants.
    pub fn new(corpus_id: impl Into<String>, books: Vec<Book>) -> Result<Self> {
        if books.is_empty() {
            return Err(Error::Corpus("corpus has no books".into()));
        }
        let mut titles = BTreeSet::new();
        for book in &books {
            if !titles.insert(book.title.as_str()) {
                return Err(Error::Corpus(format!("duplicate book title {:?}", book.title)));
            }
            if book.poems.is_empty() {
                return Err(Error::Corpus(format!("empty book {:?}", book.title)));
            }
            for (i, poem) in book.poems.iter().enumerate() {
                if poem.index != i {
                    return Err(Error::Corpus(format!(
                        "book {:?}: poem index {} at position {}",
                        book.title, poem.index, i
                    )));
                }
                if poem.verses.is_empty() || poem.verses.iter().any(|v| v.trim().is_empty()) {
                    return Err(Error::Corpus(format!(
                        "book {:?}: poem {:?} has no verse lines",
                        book.title, poem.title
                    )));
                }
            }
        }
        Ok(Self {
            corpus_id: corpus_id.into(),
            books,
        })
    }

    pub fn poem_count(&self) -> usize {
        self.books.iter().map(|b| b.poems.len()).sum()
    }
}

impl Poem {
    pub fn new(index: usize, title: impl Into<String>, verses: Vec<String>) -> Self {
        Self {
            index,
            title: title.into(),
            verses,
        }
    }
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|_| Error::NotUtf8 {
        path: path.to_path_buf(),
    })
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        entries.push(entry.path());
    }
    entries.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(entries)
}

fn parse_poem(path: &Path, index: usize) -> Result<Poem> {
    let text = read_utf8(path)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let title = lines
        .next()
        .ok_or_else(|| Error::Corpus(format!("{}: empty poem file", path.display())))?;
    let verses: Vec<String> = lines.map(str::to_owned).collect();
    if verses.is_empty() {
        return Err(Error::Corpus(format!(
            "{}: poem has no verse lines",
            path.display()
        )));
    }
    Ok(Poem::new(index, title, verses))
}

/// Loads a corpus directory.
pub fn load_corpus(root: impl AsRef<Path>) -> Result<Corpus> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::Corpus(format!(
            "missing corpus directory {}",
            root.display()
        )));
    }
    let mut books = Vec::new();
    for dir in sorted_entries(root)? {
        if !dir.is_dir() {
            continue;
        }
        let title = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let files: Vec<PathBuf> = sorted_entries(&dir)?
            .into_iter()
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
            .collect();
        if files.is_empty() {
            return Err(Error::Corpus(format!("empty book {}", dir.display())));
        }
        let poems = files
            .iter()
            .enumerate()
            .map(|(i, f)| parse_poem(f, i))
            .collect::<Result<Vec<_>>>()?;
        books.push(Book { title, poems });
    }
    let corpus_id = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_owned());
    Corpus::new(corpus_id, books)
}

/// Stop-word list; members are stored normalized.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StopwordSet {
    tokens: BTreeSet<String>,
}

/// Persian stop words removed before analysis. Duplicates in the source
/// table ("نیست", "میکند", "این", "است") are listed once.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "ما", "دگر", "نیست", "و", "آن", "مرا", "میکند", "کش", "همه", "به", "او", "میکنی",
    "گر", "دیگر", "کس", "داشت", "این", "چگونه", "با", "تو", "است", "رسان", "برای", "شده",
    "کشید", "اگر", "تا", "میکردم", "دار", "اما", "آور", "ده", "یا", "کرد", "رساند", "باز",
    "چقدر", "هر", "گرفت", "میکردیم", "چون", "همچو", "آورد", "داد", "میکنم", "کن", "زیر",
    "مثل", "میتواند", "بر", "را", "گیر", "من", "کیست", "همچون", "میشود", "هست", "بود",
    "چرا", "شاید", "زد", "که", "ز", "باید", "از", "چیست", "خود", "میان", "در", "باش", "هم",
    "آیا", "زدن", "میرفت",
];

impl StopwordSet {
    pub fn default_persian() -> Self {
        Self::from_tokens(DEFAULT_STOPWORDS.iter().copied())
    }

    /// Normalizes and deduplicates; blank entries are dropped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokens = tokens
            .into_iter()
            .map(|t| normalize(t.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        Self { tokens }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

/// Loads a stop-word file (one token per line, `#` comments), or the
/// built-in list when `path` is `None`.
pub fn load_stopwords(path: Option<&Path>) -> Result<StopwordSet> {
    let Some(path) = path else {
        return Ok(StopwordSet::default_persian());
    };
    let text = read_utf8(path)?;
    let set = StopwordSet::from_tokens(
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#')),
    );
    if set.is_empty() {
        return Err(Error::format(path, 1, "empty stop-word file"));
    }
    Ok(set)
}
