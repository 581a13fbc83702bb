#include <math.h>
#include <stdio.h>
#include <string.h>

#include "poemscope.h"

#define CHECK(cond)                                                     \
    do {                                                                \
        if (!(cond)) {                                                  \
            const char *e = ps_last_error();                            \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,    \
                    #cond, e ? e : "no error");                         \
            return 1;                                                   \
        }                                                               \
    } while (0)

int main(int argc, char **argv) {
    if (argc < 2) {
        fprintf(stderr, "usage: smoke CORPUS\n");
        return 2;
    }

    double a[3] = {1.0, 2.0, 3.0}, b[3] = {2.0, 4.0, 6.0}, c;
    int32_t degenerate = -1;
    CHECK(ps_cosine(a, b, 3, &c, &degenerate) == PS_STATUS_OK);
    CHECK(fabs(c - 1.0) < 1e-12 && degenerate == 0);
    CHECK(ps_cosine(NULL, b, 3, &c, &degenerate) == PS_STATUS_NULL);
    CHECK(ps_last_error() != NULL);

    char *norm = NULL;
    CHECK(ps_normalize("\xd9\x83\xd8\xaa\xd8\xa7\xd8\xa8", &norm) == PS_STATUS_OK);
    CHECK(strcmp(norm, "\xda\xa9\xd8\xaa\xd8\xa7\xd8\xa8") == 0);
    ps_string_free(norm);

    double pts[8] = {0, 0, 0, 1, 10, 10, 10, 11};
    size_t labels[4];
    double inertia;
    CHECK(ps_kmeans(pts, 4, 2, 2, 42, labels, &inertia) == PS_STATUS_OK);
    CHECK(labels[0] == labels[1] && labels[2] == labels[3] && labels[0] != labels[2]);
    CHECK(ps_kmeans(pts, 4, 2, 9, 42, labels, &inertia) == PS_STATUS_INVALID_ARGUMENT);

    PsCorpus *corpus = NULL;
    CHECK(ps_corpus_load("/no/such/dir", &corpus) == PS_STATUS_DATA);
    CHECK(ps_corpus_load(argv[1], &corpus) == PS_STATUS_OK);
    size_t books = 0, poems = 0;
    CHECK(ps_corpus_book_count(corpus, &books) == PS_STATUS_OK && books == 5);
    CHECK(ps_corpus_poem_count(corpus, 0, &poems) == PS_STATUS_OK && poems > 0);

    PsTopicModel *model = NULL;
    CHECK(ps_lda_fit(corpus, 0, 4, 42, &model) == PS_STATUS_OK);
    size_t docs = 0, topics = 0;
    CHECK(ps_lda_dims(model, &docs, &topics) == PS_STATUS_OK && docs == poems && topics == 4);
    double theta[64];
    CHECK(docs * topics <= 64);
    CHECK(ps_lda_theta(model, theta, docs * topics) == PS_STATUS_OK);
    for (size_t d = 0; d < docs; d++) {
        double s = 0;
        for (size_t t = 0; t < topics; t++) s += theta[d * topics + t];
        CHECK(fabs(s - 1.0) < 1e-9);
    }
    ps_lda_free(model);
    ps_corpus_free(corpus);
    puts("ok");
    return 0;
}
