//! C ABI over poemscope.
//!
//! Every function returns a [`PsStatus`]. On failure the message is kept in a
//! thread-local slot readable with [`ps_last_error`]. Objects are opaque
//! handles created by `*_load`/`*_fit` and released with the matching
//! `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use poemscope::corpus::{load_corpus, Corpus};
use poemscope::error::Error;
use poemscope::features::{build_vocabulary, cosine};
use poemscope::report::{run_tasks, RunConfig, Tasks};
use poemscope::textprep::{normalize, preprocess_poem, PrepConfig, TokenizedPoem};
use poemscope::topics::{fit_lda, LdaConfig, TopicModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    Null = 1,
    InvalidArgument = 2,
    Io = 3,
    /// Malformed corpus or input file.
    Data = 4,
    /// Training diverged.
    Numeric = 5,
    Panic = 6,
}

/// Loaded corpus.
pub struct PsCorpus {
    inner: Corpus,
}

/// Fitted LDA model for one book.
pub struct PsTopicModel {
    inner: TopicModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> PsStatus {
    match err {
        Error::Io { .. } | Error::NotUtf8 { .. } => PsStatus::Io,
        Error::Corpus(_) | Error::Format { .. } | Error::OutOfVocabulary(_) => PsStatus::Data,
        Error::InvalidInput(_) | Error::OutOfRange { .. } | Error::DimensionMismatch { .. } => {
            PsStatus::InvalidArgument
        }
        Error::Divergence { .. } => PsStatus::Numeric,
        Error::Stage { source, .. } => status_of(source),
    }
}

struct Fail(PsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PsStatus::Null, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(PsStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("panic");
            set_error(&format!("internal panic: {msg}"));
            PsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut_arg<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Normalizes Persian text. `*out` receives a string to release with `ps_string_free`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_normalize(text: *const c_char, out: *mut *mut c_char) -> PsStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CString::new(normalize(text)).map_err(|_| invalid("text contains NUL"))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Cosine similarity of two length-`len` vectors. `*degenerate` is set to 1
/// when either vector is zero (the value is then 0).
///
/// # Safety
/// `a` and `b` must point to `len` doubles; `out` and `degenerate` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_cosine(
    a: *const f64,
    b: *const f64,
    len: usize,
    out: *mut f64,
    degenerate: *mut i32,
) -> PsStatus {
    guard(|| {
        let a = slice_arg(a, len, "a")?;
        let b = slice_arg(b, len, "b")?;
        if out.is_null() || degenerate.is_null() {
            return Err(null("out"));
        }
        let c = cosine(a, b)?;
        *out = c.value;
        *degenerate = c.degenerate as i32;
        Ok(())
    })
}

/// K-means over `n` row-major points of width `dim`. Writes `n` labels and the final inertia.
///
/// # Safety
/// `points` must hold `n * dim` doubles and `labels` room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn ps_kmeans(
    points: *const f64,
    n: usize,
    dim: usize,
    k: usize,
    seed: u64,
    labels: *mut usize,
    inertia: *mut f64,
) -> PsStatus {
    guard(|| {
        let len = n.checked_mul(dim).ok_or_else(|| invalid("n * dim overflows"))?;
        if dim == 0 {
            return Err(invalid("dim must be >= 1"));
        }
        let flat = slice_arg(points, len, "points")?;
        let labels = slice_mut_arg(labels, n, "labels")?;
        let rows: Vec<Vec<f64>> = flat.chunks(dim).map(<[f64]>::to_vec).collect();
        let fit = poemscope::cluster::kmeans(&rows, k, seed)?;
        labels.copy_from_slice(&fit.labels);
        if !inertia.is_null() {
            *inertia = fit.inertia;
        }
        Ok(())
    })
}

/// Loads a corpus directory.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_corpus_load(path: *const c_char, out: *mut *mut PsCorpus) -> PsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = load_corpus(path)?;
        *out = Box::into_raw(Box::new(PsCorpus { inner }));
        Ok(())
    })
}

/// # Safety
/// `corpus` must come from `ps_corpus_load`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_corpus_book_count(corpus: *const PsCorpus, out: *mut usize) -> PsStatus {
    guard(|| {
        let corpus = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = corpus.inner.books.len();
        Ok(())
    })
}

/// # Safety
/// `corpus` must come from `ps_corpus_load`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_corpus_poem_count(corpus: *const PsCorpus, book: usize, out: *mut usize) -> PsStatus {
    guard(|| {
        let corpus = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let b = corpus.inner.books.get(book).ok_or(Error::OutOfRange {
            index: book,
            len: corpus.inner.books.len(),
        })?;
        *out = b.poems.len();
        Ok(())
    })
}

/// # Safety
/// `corpus` must come from `ps_corpus_load` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ps_corpus_free(corpus: *mut PsCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Fits LDA with `k` topics on one book, using the default stop words and stemmer.
///
/// # Safety
/// `corpus` must come from `ps_corpus_load`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_lda_fit(
    corpus: *const PsCorpus,
    book: usize,
    k: usize,
    seed: u64,
    out: *mut *mut PsTopicModel,
) -> PsStatus {
    guard(|| {
        let corpus = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let b = corpus.inner.books.get(book).ok_or(Error::OutOfRange {
            index: book,
            len: corpus.inner.books.len(),
        })?;
        let prep = PrepConfig::stemming();
        let poems: Vec<TokenizedPoem> = b
            .poems
            .iter()
            .map(|p| preprocess_poem(p, &prep))
            .collect::<Result<_, _>>()?;
        let vocab = build_vocabulary(&poems)?;
        let mut config = LdaConfig::with_topics(k);
        config.seed = seed;
        let inner = fit_lda(&poems, &vocab, &config)?;
        *out = Box::into_raw(Box::new(PsTopicModel { inner }));
        Ok(())
    })
}

/// Number of documents and topics.
///
/// # Safety
/// `model` must come from `ps_lda_fit`; `docs` and `topics` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_lda_dims(model: *const PsTopicModel, docs: *mut usize, topics: *mut usize) -> PsStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let docs = docs.as_mut().ok_or_else(|| null("docs"))?;
        let topics = topics.as_mut().ok_or_else(|| null("topics"))?;
        *docs = model.inner.theta.len();
        *topics = model.inner.k;
        Ok(())
    })
}

/// Copies the document-topic matrix, row-major, into `out` (`len` must be docs × topics).
///
/// # Safety
/// `model` must come from `ps_lda_fit`; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_lda_theta(model: *const PsTopicModel, out: *mut f64, len: usize) -> PsStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let want = model.inner.theta.len() * model.inner.k;
        if len != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                actual: len,
            }
            .into());
        }
        let out = slice_mut_arg(out, len, "out")?;
        for (dst, src) in out.iter_mut().zip(model.inner.theta.iter().flatten()) {
            *dst = *src;
        }
        Ok(())
    })
}

/// # Safety
/// `model` must come from `ps_lda_fit` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ps_lda_free(model: *mut PsTopicModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs a report the way the CLI does. `command` is a subcommand name
/// (`freq`, `cluster-top5`, `cluster-trigram`, `similarity`, `lda`,
/// `fuse-cluster`, `report-all`). `config_path` is a `key = value` file;
/// `out_dir` overrides its output directory when non-null.
///
/// # Safety
/// String arguments must be NUL-terminated; `artifact_count` may be null.
#[no_mangle]
pub unsafe extern "C" fn ps_run_report(
    config_path: *const c_char,
    command: *const c_char,
    out_dir: *const c_char,
    artifact_count: *mut usize,
) -> PsStatus {
    guard(|| {
        let config_path = str_arg(config_path, "config_path")?;
        let command = str_arg(command, "command")?;
        let tasks = Tasks::for_command(command).ok_or_else(|| invalid(format!("unknown command {command:?}")))?;
        let mut config = RunConfig::from_file(config_path.as_ref())?;
        if !out_dir.is_null() {
            config.out = PathBuf::from(str_arg(out_dir, "out_dir")?);
        }
        let bundle = run_tasks(&config, tasks)?;
        if let Some(n) = artifact_count.as_mut() {
            *n = bundle.artifacts.len();
        }
        Ok(())
    })
}
