#ifndef TREEPATH_H
#define TREEPATH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum TpStatus {
  TP_STATUS_OK = 0,
  TP_STATUS_INVALID_PARAM = 1,
  TP_STATUS_OVERFLOW = 2,
  TP_STATUS_SCALE_GUARD = 3,
  TP_STATUS_WORK_CAP_EXCEEDED = 4,
  TP_STATUS_NUMERICAL = 5,
  TP_STATUS_UNDEFINED = 6,
  TP_STATUS_BATCH_FAILED = 7,
  TP_STATUS_NULL_POINTER = 8,
  TP_STATUS_PANIC = 9,
} TpStatus;

/**
 * Simulated statistic for [`tp_simulate`].
 */
typedef enum TpStatistic {
  TP_STATISTIC_THETA = 0,
  TP_STATISTIC_SPANNING = 1,
  TP_STATISTIC_LONGEST_OPEN = 2,
  TP_STATISTIC_LONGEST_INCREASING = 3,
  TP_STATISTIC_INCREASING_COUNT = 4,
} TpStatistic;

/**
 * One seeded batch of simulated values, in replicate order.
 */
typedef struct TpBatch TpBatch;

/**
 * A finite law on the integers, support sorted ascending.
 */
typedef struct TpPmf TpPmf;

/**
 * Window prediction for the longest increasing path.
 */
typedef struct TpPrediction TpPrediction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tp_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tp_last_error_message(void);

/**
 * Limit of `P(Theta_n >= 1)` as `n` grows.
 *
 * # Safety
 * `out` must be valid for a write of one double.
 */
enum TpStatus tp_survival_limit(uint32_t branching, double p, double *out);

/**
 * `E(Theta_n) = N^n p^(n+1)`.
 *
 * # Safety
 * `out` must be valid for a write of one double.
 */
enum TpStatus tp_expected_theta(uint32_t branching, uint32_t depth, double p, double *out);

/**
 * Expected number of open length-`k` paths.
 *
 * # Safety
 * `out` must be valid for a write of one double.
 */
enum TpStatus tp_expected_open_count(uint32_t branching,
                                     uint32_t depth,
                                     double p,
                                     uint32_t k,
                                     double *out);

/**
 * Upper bound on the variance of the open length-`k` path count.
 *
 * # Safety
 * `out` must be valid for a write of one double.
 */
enum TpStatus tp_variance_bound_open(uint32_t branching,
                                     uint32_t depth,
                                     double p,
                                     uint32_t k,
                                     double *out);

/**
 * In-probability limit of `L_{N,n} / n`.
 *
 * # Safety
 * `out` must be valid for a write of one double.
 */
enum TpStatus tp_lln_limit(uint32_t branching, double p, double *out);

/**
 * Expected number of increasing length-`k` paths.
 *
 * # Safety
 * `out` must be valid for a write of one double.
 */
enum TpStatus tp_expected_increasing_count(uint32_t branching,
                                           uint32_t depth,
                                           uint32_t k,
                                           double *out);

/**
 * Exact law of `Theta_n`.
 *
 * # Safety
 * `out` must be valid for a write of one pointer.
 */
enum TpStatus tp_theta_pmf(uint32_t branching, uint32_t depth, double p, struct TpPmf **out);

/**
 * Exact law of the longest open run; -1 stands for "every vertex closed".
 *
 * # Safety
 * `out` must be valid for a write of one pointer.
 */
enum TpStatus tp_longest_open_pmf(uint32_t branching, uint32_t depth, double p, struct TpPmf **out);

/**
 * Number of support points.
 *
 * # Safety
 * `h` must be NULL or a live handle from this library.
 */
size_t tp_pmf_len(const struct TpPmf *h);

/**
 * The `i`-th support point and its mass.
 *
 * # Safety
 * `h` must be a live handle; `value` and `mass` must be valid for writes.
 */
enum TpStatus tp_pmf_entry(const struct TpPmf *h, size_t i, int64_t *value, double *mass);

/**
 * Mass at `value` (0 off the support, NaN for a NULL handle).
 *
 * # Safety
 * `h` must be NULL or a live handle from this library.
 */
double tp_pmf_mass(const struct TpPmf *h, int64_t value);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void tp_pmf_free(struct TpPmf *h);

/**
 * Three-value window prediction for the longest increasing path.
 *
 * # Safety
 * `out` must be valid for a write of one pointer.
 */
enum TpStatus tp_window_prediction(uint32_t branching, uint32_t depth, struct TpPrediction **out);

/**
 * `b`, `f` and the fractional part of `f`. Any output may be NULL.
 *
 * # Safety
 * `h` must be a live handle; non-NULL outputs must be valid for writes.
 */
enum TpStatus tp_prediction_centering(const struct TpPrediction *h,
                                      double *b,
                                      double *f,
                                      double *frac);

/**
 * The window `[f]-1, [f], [f]+1` and its predicted mass.
 *
 * # Safety
 * `h` must be a live handle; all outputs must be valid for writes.
 */
enum TpStatus tp_prediction_window(const struct TpPrediction *h,
                                   int64_t *low,
                                   int64_t *mid,
                                   int64_t *high,
                                   double *mass);

/**
 * `lambda(k)`, defined for `k` in `[f]-2 ..= [f]+3`.
 *
 * # Safety
 * `h` must be a live handle; `out` must be valid for a write.
 */
enum TpStatus tp_prediction_lambda(const struct TpPrediction *h, int64_t k, double *out);

/**
 * Predicted `P(L = k)` for `k` with a tabulated point mass.
 *
 * # Safety
 * `h` must be a live handle; `out` must be valid for a write.
 */
enum TpStatus tp_prediction_point_mass(const struct TpPrediction *h, int64_t k, double *out);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void tp_prediction_free(struct TpPrediction *h);

/**
 * Draws `replicates` values of `stat`. Replicate `i` uses stream
 * `(seed, i)`, so the samples do not depend on `workers` (0 = all cores).
 * `p` is ignored by the increasing statistics; `k < 0` means "no length"
 * and is required exactly when `stat` is the increasing count.
 *
 * # Safety
 * `out` must be valid for a write of one pointer.
 */
enum TpStatus tp_simulate(enum TpStatistic stat,
                          uint32_t branching,
                          uint32_t depth,
                          double p,
                          int64_t k,
                          uint64_t replicates,
                          uint64_t seed,
                          size_t workers,
                          struct TpBatch **out);

/**
 * Number of samples (0 for a NULL handle).
 *
 * # Safety
 * `h` must be NULL or a live handle from this library.
 */
size_t tp_batch_len(const struct TpBatch *h);

/**
 * Borrowed view of the samples, valid until the handle is freed.
 *
 * # Safety
 * `h` must be NULL or a live handle from this library.
 */
const int64_t *tp_batch_samples(const struct TpBatch *h);

/**
 * Sample mean (NaN when empty or NULL).
 *
 * # Safety
 * `h` must be NULL or a live handle from this library.
 */
double tp_batch_mean(const struct TpBatch *h);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void tp_batch_free(struct TpBatch *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREEPATH_H */
