#ifndef ACORSIS_H
#define ACORSIS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AcorsisStatus {
  ACORSIS_STATUS_OK = 0,
  ACORSIS_STATUS_NULL_POINTER = 1,
  ACORSIS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A constant column or a one-class binary response.
   */
  ACORSIS_STATUS_DEGENERATE = 3,
  /**
   * Screening size out of range.
   */
  ACORSIS_STATUS_INVALID_SIZE = 4,
  ACORSIS_STATUS_OPTIMIZER_FAILED = 5,
  /**
   * Output buffer too small; the required length was still written.
   */
  ACORSIS_STATUS_BUFFER_TOO_SMALL = 6,
  ACORSIS_STATUS_PANIC = 99,
} AcorsisStatus;

typedef enum AcorsisFamily {
  ACORSIS_FAMILY_GAUSSIAN = 0,
  ACORSIS_FAMILY_BINOMIAL = 1,
} AcorsisFamily;

typedef enum AcorsisMethod {
  ACORSIS_METHOD_GRESH = 0,
  ACORSIS_METHOD_SHIM = 1,
} AcorsisMethod;

/**
 * Standardised data. Opaque to C.
 */
typedef struct AcorsisDataset AcorsisDataset;

/**
 * A selected model. Opaque to C.
 */
typedef struct AcorsisModel AcorsisModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *acorsis_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *acorsis_version(void);

/**
 * Standardises `y` (length `n`) and the column-major `x` (`n * p` values)
 * into a new dataset written to `*out`.
 *
 * # Safety
 * `y` and `x` must point to `n` and `n * p` readable doubles; `out` must be
 * writable.
 */
enum AcorsisStatus acorsis_dataset_new(const double *y,
                                       const double *x,
                                       size_t n,
                                       size_t p,
                                       enum AcorsisFamily family,
                                       struct AcorsisDataset **out);

/**
 * # Safety
 * `ds` must come from [`acorsis_dataset_new`] and not be used afterwards.
 * Null is ignored.
 */
void acorsis_dataset_free(struct AcorsisDataset *ds);

/**
 * Rows and columns of a dataset.
 *
 * # Safety
 * `ds` must be a live dataset handle; `n` and `p` must be writable.
 */
enum AcorsisStatus acorsis_dataset_shape(const struct AcorsisDataset *ds, size_t *n, size_t *p);

/**
 * Scores every variable and keeps the top `d` (or `[gamma n]` when `d` is
 * 0 and `gamma > 0`, or `[n / ln n]` when both are 0).
 *
 * `scores` and `partners` receive `p` values each (either may be null);
 * partner 0 means the main effect scored highest. The 1-based kept
 * variables go to `selected` (capacity `cap`) in increasing order and
 * their count to `*n_selected`.
 *
 * # Safety
 * Non-null buffers must have the stated lengths; `ds` must be live.
 */
enum AcorsisStatus acorsis_screen(const struct AcorsisDataset *ds,
                                  double gamma,
                                  size_t d,
                                  size_t threads,
                                  double *scores,
                                  size_t *partners,
                                  size_t *selected,
                                  size_t cap,
                                  size_t *n_selected);

/**
 * Selects a hierarchical model on the 1-based variables `vars`. Gaussian
 * data use the GIC-tuned path of `method`; binomial data use penalised
 * logistic selection and ignore `method`. A negative `kappa` means
 * `ln p · ln ln n`.
 *
 * # Safety
 * `vars` must hold `n_vars` values; `ds` must be live; `out` writable.
 */
enum AcorsisStatus acorsis_fit(const struct AcorsisDataset *ds,
                               const size_t *vars,
                               size_t n_vars,
                               enum AcorsisMethod method,
                               double kappa,
                               struct AcorsisModel **out);

/**
 * # Safety
 * `m` must come from [`acorsis_fit`] and not be used afterwards. Null is
 * ignored.
 */
void acorsis_model_free(struct AcorsisModel *m);

/**
 * Intercept, chosen penalty and GIC value of a model. Any output pointer
 * may be null.
 *
 * # Safety
 * `m` must be a live model handle.
 */
enum AcorsisStatus acorsis_model_summary(const struct AcorsisModel *m,
                                         double *intercept,
                                         double *lambda,
                                         double *gic);

/**
 * Writes the nonzero effects: `j[i] = 0` marks the main effect of `k[i]`,
 * otherwise the interaction of `j[i] < k[i]`. Mains come first, each group
 * in increasing order. `*len` receives the number of effects; if it
 * exceeds `cap` nothing else is written.
 *
 * # Safety
 * `j`, `k`, `coef` must hold `cap` values each (may be null when `cap` is 0).
 */
enum AcorsisStatus acorsis_model_effects(const struct AcorsisModel *m,
                                         size_t *j,
                                         size_t *k,
                                         double *coef,
                                         size_t cap,
                                         size_t *len);

/**
 * 1 when every interaction in the model has both parent mains, else 0.
 *
 * # Safety
 * `m` must be a live model handle; `out` writable.
 */
enum AcorsisStatus acorsis_model_hierarchy_ok(const struct AcorsisModel *m, int32_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACORSIS_H */
