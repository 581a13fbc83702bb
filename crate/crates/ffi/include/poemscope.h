#ifndef POEMSCOPE_H
#define POEMSCOPE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PsStatus {
  PS_STATUS_OK = 0,
  // A required pointer argument was null.
  PS_STATUS_NULL = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_IO = 3,
  // Malformed corpus or input file.
  PS_STATUS_DATA = 4,
  // Training diverged.
  PS_STATUS_NUMERIC = 5,
  PS_STATUS_PANIC = 6,
} PsStatus;

// Loaded corpus.
typedef struct PsCorpus PsCorpus;

// Fitted LDA model for one book.
typedef struct PsTopicModel PsTopicModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a success.
// The pointer stays valid until the next call on the same thread.
const char *ps_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void ps_string_free(char *s);

// Normalizes Persian text. `*out` receives a string to release with `ps_string_free`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum PsStatus ps_normalize(const char *text, char **out);

// Cosine similarity of two length-`len` vectors. `*degenerate` is set to 1
// when either vector is zero (the value is then 0).
//
// # Safety
// `a` and `b` must point to `len` doubles; `out` and `degenerate` must be valid.
enum PsStatus ps_cosine(const double *a,
                        const double *b,
                        size_t len,
                        double *out,
                        int32_t *degenerate);

// K-means over `n` row-major points of width `dim`. Writes `n` labels and the final inertia.
//
// # Safety
// `points` must hold `n * dim` doubles and `labels` room for `n` values.
enum PsStatus ps_kmeans(const double *points,
                        size_t n,
                        size_t dim,
                        size_t k,
                        uint64_t seed,
                        size_t *labels,
                        double *inertia);

// Loads a corpus directory.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum PsStatus ps_corpus_load(const char *path, struct PsCorpus **out);

// # Safety
// `corpus` must come from `ps_corpus_load`; `out` must be valid.
enum PsStatus ps_corpus_book_count(const struct PsCorpus *corpus, size_t *out);

// # Safety
// `corpus` must come from `ps_corpus_load`; `out` must be valid.
enum PsStatus ps_corpus_poem_count(const struct PsCorpus *corpus, size_t book, size_t *out);

// # Safety
// `corpus` must come from `ps_corpus_load` and not be used afterwards. Null is ignored.
void ps_corpus_free(struct PsCorpus *corpus);

// Fits LDA with `k` topics on one book, using the default stop words and stemmer.
//
// # Safety
// `corpus` must come from `ps_corpus_load`; `out` must be valid.
enum PsStatus ps_lda_fit(const struct PsCorpus *corpus,
                         size_t book,
                         size_t k,
                         uint64_t seed,
                         struct PsTopicModel **out);

// Number of documents and topics.
//
// # Safety
// `model` must come from `ps_lda_fit`; `docs` and `topics` must be valid.
enum PsStatus ps_lda_dims(const struct PsTopicModel *model, size_t *docs, size_t *topics);

// Copies the document-topic matrix, row-major, into `out` (`len` must be docs × topics).
//
// # Safety
// `model` must come from `ps_lda_fit`; `out` must hold `len` doubles.
enum PsStatus ps_lda_theta(const struct PsTopicModel *model, double *out, size_t len);

// # Safety
// `model` must come from `ps_lda_fit` and not be used afterwards. Null is ignored.
void ps_lda_free(struct PsTopicModel *model);

// Runs a report the way the CLI does. `command` is a subcommand name
// (`freq`, `cluster-top5`, `cluster-trigram`, `similarity`, `lda`,
// `fuse-cluster`, `report-all`). `config_path` is a `key = value` file;
// `out_dir` overrides its output directory when non-null.
//
// # Safety
// String arguments must be NUL-terminated; `artifact_count` may be null.
enum PsStatus ps_run_report(const char *config_path,
                            const char *command,
                            const char *out_dir,
                            size_t *artifact_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POEMSCOPE_H */
