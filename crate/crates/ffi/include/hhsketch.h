#ifndef HHSKETCH_H
#define HHSKETCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum HhStatus {
  HH_STATUS_OK = 0,
  HH_STATUS_NULL_POINTER = 1,
  HH_STATUS_INVALID_PARAMETER = 2,
  HH_STATUS_INDEX_OUT_OF_RANGE = 3,
  HH_STATUS_STRICT_VIOLATION = 4,
  HH_STATUS_BUFFER_TOO_SMALL = 5,
  HH_STATUS_INTERNAL = 6,
  HH_STATUS_PANIC = 7,
} HhStatus;

/**
 * Count-Min list sketch for ε-heavy hitters.
 */
typedef struct HhCountMin HhCountMin;

/**
 * Deterministic heavy-hitter sketch over an explicit expander.
 */
typedef struct HhDet HhDet;

/**
 * Dyadic search over promise Count-Min levels.
 */
typedef struct HhDyadic HhDyadic;

/**
 * Non-adaptive sparse recovery pipeline.
 */
typedef struct HhPipeline HhPipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *hh_status_message(enum HhStatus status);

/**
 * Creates a Count-Min sketch over `[0, n)` for accuracy `eps` and
 * failure probability `delta`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum HhStatus hh_cm_new(size_t n, double eps, double delta, uint64_t seed, struct HhCountMin **out);

/**
 * # Safety
 * `sketch` must be null or a handle from [`hh_cm_new`] not yet freed.
 */
void hh_cm_free(struct HhCountMin *sketch);

/**
 * Adds `delta` to coordinate `index`.
 *
 * # Safety
 * `sketch` must be a live handle.
 */
enum HhStatus hh_cm_update(struct HhCountMin *sketch, size_t index, double delta);

/**
 * Point estimate of coordinate `index`.
 *
 * # Safety
 * `sketch` must be a live handle and `out` writable.
 */
enum HhStatus hh_cm_estimate(const struct HhCountMin *sketch, size_t index, double *out);

/**
 * Writes the heavy-hitter list, largest estimate first. `*len` receives
 * the list length even when `cap` is too small.
 *
 * # Safety
 * `sketch` must be a live handle, `out` must hold `cap` values and `len`
 * must be writable.
 */
enum HhStatus hh_cm_query(const struct HhCountMin *sketch, size_t *out, size_t cap, size_t *len);

/**
 * Number of counters held by the sketch.
 *
 * # Safety
 * `sketch` must be a live handle and `out` writable.
 */
enum HhStatus hh_cm_space(const struct HhCountMin *sketch, size_t *out);

/**
 * Creates a dyadic heavy-hitter sketch over `[0, n)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HhStatus hh_dyadic_new(size_t n,
                            double eps,
                            double delta,
                            uint64_t seed,
                            struct HhDyadic **out);

/**
 * # Safety
 * `sketch` must be null or a live handle.
 */
void hh_dyadic_free(struct HhDyadic *sketch);

/**
 * # Safety
 * `sketch` must be a live handle.
 */
enum HhStatus hh_dyadic_update(struct HhDyadic *sketch, size_t index, double delta);

/**
 * # Safety
 * Same contract as [`hh_cm_query`].
 */
enum HhStatus hh_dyadic_query(const struct HhDyadic *sketch, size_t *out, size_t cap, size_t *len);

/**
 * Creates the deterministic sketch on the expander with field size `q`,
 * message length `a`, folding `c` and power base `h`, over the first `n`
 * left vertices. `zeta` is the expansion slack and `c_list` the list
 * constant; the caller is responsible for certifying expansion.
 *
 * # Safety
 * `out` must be writable.
 */
enum HhStatus hh_det_new(uint64_t q,
                         size_t a,
                         size_t c,
                         uint64_t h,
                         size_t n,
                         double eps,
                         double zeta,
                         double c_list,
                         struct HhDet **out);

/**
 * # Safety
 * `sketch` must be null or a live handle.
 */
void hh_det_free(struct HhDet *sketch);

/**
 * # Safety
 * `sketch` must be a live handle.
 */
enum HhStatus hh_det_update(struct HhDet *sketch, size_t index, double delta);

/**
 * # Safety
 * `sketch` must be a live handle and `out` writable.
 */
enum HhStatus hh_det_estimate(const struct HhDet *sketch, size_t index, double *out);

/**
 * # Safety
 * Same contract as [`hh_cm_query`].
 */
enum HhStatus hh_det_query(const struct HhDet *sketch, size_t *out, size_t cap, size_t *len);

/**
 * Builds a recovery pipeline for sparsity `k` and accuracy `eps`.
 * `schedule` is 0 for the quadratic schedule and 1 for the fast one.
 *
 * # Safety
 * `out` must be writable.
 */
enum HhStatus hh_pipeline_new(size_t n,
                              size_t k,
                              double eps,
                              uint32_t schedule,
                              uint64_t seed,
                              struct HhPipeline **out);

/**
 * # Safety
 * `pipeline` must be null or a live handle.
 */
void hh_pipeline_free(struct HhPipeline *pipeline);

/**
 * Total number of linear measurements.
 *
 * # Safety
 * `pipeline` must be a live handle and `out` writable.
 */
enum HhStatus hh_pipeline_rows(const struct HhPipeline *pipeline, size_t *out);

/**
 * Measures the dense signal `x` of length `n` and recovers a sparse
 * approximation as parallel arrays of indices and values. `*len`
 * receives the support size even when `cap` is too small.
 *
 * # Safety
 * `x` must hold `n` values, `indices` and `values` must hold `cap`
 * entries each, and `len` must be writable.
 */
enum HhStatus hh_pipeline_recover(const struct HhPipeline *pipeline,
                                  const double *x,
                                  size_t n,
                                  size_t *indices,
                                  double *values,
                                  size_t cap,
                                  size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HHSKETCH_H */
