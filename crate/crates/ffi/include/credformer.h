#ifndef CREDFORMER_H
#define CREDFORMER_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  CF_STATUS_NULL_POINTER = 1,
  /**
   * Bad argument or configuration.
   */
  CF_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Unreadable file, malformed checkpoint, shape or label problem.
   */
  CF_STATUS_DATA_ERROR = 3,
  /**
   * Non-finite values during scoring.
   */
  CF_STATUS_NUMERIC_ERROR = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  CF_STATUS_PANIC = 5,
} CfStatus;

/**
 * Opaque model handle.
 */
typedef struct CfModel CfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cf_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *cf_last_error(void);

/**
 * Loads a checkpoint file into a new handle written to `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CfStatus cf_model_load(const char *path, struct CfModel **out);

/**
 * Loads a checkpoint from `len` bytes at `data`.
 *
 * # Safety
 * `data` must point to `len` readable bytes and `out` must be writable.
 */
enum CfStatus cf_model_load_bytes(const uint8_t *data, size_t len, struct CfModel **out);

/**
 * Writes the model to `path` in checkpoint format.
 *
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum CfStatus cf_model_save(const struct CfModel *model, const char *path);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void cf_model_free(struct CfModel *model);

/**
 * Number of raw input features the model expects; 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t cf_model_n_features(const struct CfModel *model);

/**
 * Scores `n_rows` raw rows of `n_cols` values each (row-major). NaN marks a
 * missing cell. The embedded preprocessor is applied before the model.
 * Writes `n_rows` probabilities to `out`.
 *
 * # Safety
 * `rows` must hold `n_rows * n_cols` values and `out` room for `n_rows`.
 */
enum CfStatus cf_model_predict(const struct CfModel *model,
                               const double *rows,
                               size_t n_rows,
                               size_t n_cols,
                               double *out);

/**
 * Area under the ROC curve, ties counted as one half.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be writable.
 */
enum CfStatus cf_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Kolmogorov-Smirnov statistic, `max |TPR − FPR|`.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be writable.
 */
enum CfStatus cf_ks(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Fraction of rows where `score >= threshold` matches the label.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be writable.
 */
enum CfStatus cf_accuracy(const double *scores,
                          const uint8_t *labels,
                          size_t n,
                          double threshold,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CREDFORMER_H */
