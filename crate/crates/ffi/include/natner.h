#ifndef NATNER_H
#define NATNER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum NatnerStatus {
  NATNER_STATUS_OK = 0,
  NATNER_STATUS_NULL_POINTER = 1,
  NATNER_STATUS_INVALID_UTF8 = 2,
  NATNER_STATUS_PARSE_ERROR = 3,
  NATNER_STATUS_INVALID_ARGUMENT = 4,
  NATNER_STATUS_IO_ERROR = 5,
  NATNER_STATUS_MODEL_ERROR = 6,
  NATNER_STATUS_INTERNAL = 7,
} NatnerStatus;

/**
 * Parsed CoNLL corpus.
 */
typedef struct NatnerCorpus NatnerCorpus;

/**
 * OCR error table.
 */
typedef struct NatnerErrorTable NatnerErrorTable;

/**
 * Trained CRF labeler.
 */
typedef struct NatnerModel NatnerModel;

/**
 * Strict entity-level micro scores.
 */
typedef struct NatnerScores {
  double precision;
  double recall;
  double f1;
  size_t true_positives;
  size_t false_positives;
  size_t false_negatives;
} NatnerScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next natner call on the same thread.
 */
const char *natner_last_error(void);

/**
 * Library version as a static string.
 */
const char *natner_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void natner_string_free(char *s);

/**
 * Parses CoNLL text.
 *
 * # Safety
 * `conll` must be a NUL-terminated string; `out` must be writable.
 */
enum NatnerStatus natner_corpus_parse(const char *conll, struct NatnerCorpus **out);

/**
 * Serializes a corpus to CoNLL text.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum NatnerStatus natner_corpus_write(const struct NatnerCorpus *corpus, char **out);

/**
 * Number of segments, or 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
size_t natner_corpus_segment_count(const struct NatnerCorpus *corpus);

/**
 * Number of tokens, or 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
size_t natner_corpus_token_count(const struct NatnerCorpus *corpus);

/**
 * # Safety
 * `corpus` must be null or a handle not yet freed.
 */
void natner_corpus_free(struct NatnerCorpus *corpus);

/**
 * Parses a `recognized;correct;type;frequency` table.
 *
 * # Safety
 * `csv` must be a NUL-terminated string; `out` must be writable.
 */
enum NatnerStatus natner_error_table_load(const char *csv, struct NatnerErrorTable **out);

/**
 * The bundled default table.
 *
 * # Safety
 * `out` must be writable.
 */
enum NatnerStatus natner_error_table_default(struct NatnerErrorTable **out);

/**
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
enum NatnerStatus natner_error_table_save(const struct NatnerErrorTable *table, char **out);

/**
 * # Safety
 * `table` must be null or a handle not yet freed.
 */
void natner_error_table_free(struct NatnerErrorTable *table);

/**
 * Builds an error table from parallel noisy and clean corpora.
 *
 * # Safety
 * Both corpora must be live handles; `out` must be writable.
 */
enum NatnerStatus natner_analyze_errors(const struct NatnerCorpus *noisy,
                                        const struct NatnerCorpus *clean,
                                        struct NatnerErrorTable **out);

/**
 * Perturbs every eligible token once. `doubled` non-zero returns the
 * clean segments followed by the noised copies.
 *
 * # Safety
 * `corpus` and `table` must be live handles; `out` must be writable.
 */
enum NatnerStatus natner_inject_noise(const struct NatnerCorpus *corpus,
                                      const struct NatnerErrorTable *table,
                                      uint64_t seed,
                                      double lambda,
                                      int32_t doubled,
                                      struct NatnerCorpus **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum NatnerStatus natner_model_load(const char *path, struct NatnerModel **out);

/**
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated string.
 */
enum NatnerStatus natner_model_save(const struct NatnerModel *model, const char *path);

/**
 * Viterbi-labels every segment.
 *
 * # Safety
 * `model` and `corpus` must be live handles; `out` must be writable.
 */
enum NatnerStatus natner_model_tag(const struct NatnerModel *model,
                                   const struct NatnerCorpus *corpus,
                                   struct NatnerCorpus **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void natner_model_free(struct NatnerModel *model);

/**
 * Strict entity-level scores of `pred` against `gold`.
 *
 * # Safety
 * Both corpora must be live handles; `out` must be writable.
 */
enum NatnerStatus natner_evaluate(const struct NatnerCorpus *gold,
                                  const struct NatnerCorpus *pred,
                                  struct NatnerScores *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NATNER_H */
