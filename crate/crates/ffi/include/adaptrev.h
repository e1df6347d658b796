/* Generated by cbindgen; do not edit. */

#ifndef ADAPTREV_H
#define ADAPTREV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AdaptrevStatus {
  ADAPTREV_STATUS_OK = 0,
  ADAPTREV_STATUS_NULL_POINTER = 1,
  ADAPTREV_STATUS_INVALID_STRING = 2,
  ADAPTREV_STATUS_CONFIG = 3,
  ADAPTREV_STATUS_DOMAIN = 4,
  ADAPTREV_STATUS_PARAMETER = 5,
  ADAPTREV_STATUS_CLASSIFICATION = 6,
  ADAPTREV_STATUS_RANGE = 7,
  ADAPTREV_STATUS_INFINITE_RATE = 8,
  ADAPTREV_STATUS_CAPPED = 9,
  ADAPTREV_STATUS_IO = 10,
  ADAPTREV_STATUS_OUT_OF_RANGE = 11,
  ADAPTREV_STATUS_PANIC = 12,
} AdaptrevStatus;

typedef enum AdaptrevCurvature {
  ADAPTREV_CURVATURE_LOG_CONCAVE = 0,
  ADAPTREV_CURVATURE_LOG_CONVEX = 1,
  ADAPTREV_CURVATURE_NEITHER = 2,
  ADAPTREV_CURVATURE_DISCONTINUOUS_LOG_CONCAVE_TAIL = 3,
} AdaptrevCurvature;

typedef struct AdaptrevCohort AdaptrevCohort;

typedef struct AdaptrevCurve AdaptrevCurve;

typedef struct AdaptrevOptimization AdaptrevOptimization;

typedef struct AdaptrevRevenue AdaptrevRevenue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *adaptrev_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *adaptrev_version(void);

/**
 * Builds a curve from its JSON description, e.g.
 * `{"family":"exp_power","k":2}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AdaptrevStatus adaptrev_curve_from_json(const char *json, struct AdaptrevCurve **out);

/**
 * # Safety
 * `curve` must come from `adaptrev_curve_from_json` and not be used again.
 */
void adaptrev_curve_free(struct AdaptrevCurve *curve);

/**
 * # Safety
 * Pointers must be valid.
 */
enum AdaptrevStatus adaptrev_curve_eval(const struct AdaptrevCurve *curve, double x, double *out);

/**
 * Survival `p(x)^(total / x)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AdaptrevStatus adaptrev_survival(const struct AdaptrevCurve *curve,
                                      double total,
                                      double x,
                                      double *out);

/**
 * Curvature class of `ln p` and the second difference that decided it.
 *
 * # Safety
 * Pointers must be valid; `out_evidence` may be null.
 */
enum AdaptrevStatus adaptrev_classify(const struct AdaptrevCurve *curve,
                                      enum AdaptrevCurvature *out_kind,
                                      double *out_evidence);

/**
 * # Safety
 * Pointers must be valid.
 */
enum AdaptrevStatus adaptrev_tangent_point(const struct AdaptrevCurve *curve, double *out);

/**
 * Builds a revenue model from JSON, e.g.
 * `{"r":{"family":"identity"},"delta":0.9}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AdaptrevStatus adaptrev_revenue_from_json(const char *json, struct AdaptrevRevenue **out);

/**
 * # Safety
 * `rev` must come from `adaptrev_revenue_from_json` and not be used again.
 */
void adaptrev_revenue_free(struct AdaptrevRevenue *rev);

/**
 * Discounted revenue of `z` increases of size `x`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AdaptrevStatus adaptrev_revenue_pi(const struct AdaptrevCurve *curve,
                                        const struct AdaptrevRevenue *rev,
                                        double x,
                                        uint32_t z,
                                        double *out);

/**
 * Optimal number of steps of size `x`; `out_capped` reports whether the
 * search stopped at `z_max`.
 *
 * # Safety
 * Pointers must be valid; `out_capped` may be null.
 */
enum AdaptrevStatus adaptrev_z_star(const struct AdaptrevCurve *curve,
                                    const struct AdaptrevRevenue *rev,
                                    double x,
                                    uint32_t z_max,
                                    uint32_t *out_z,
                                    bool *out_capped);

/**
 * Sweeps step sizes `grid_min, grid_min + grid_step, ..., <= grid_max`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AdaptrevStatus adaptrev_optimize_sweep(const struct AdaptrevCurve *curve,
                                            const struct AdaptrevRevenue *rev,
                                            double grid_min,
                                            double grid_max,
                                            double grid_step,
                                            uint32_t z_max,
                                            struct AdaptrevOptimization **out);

/**
 * # Safety
 * `opt` must come from `adaptrev_optimize_sweep` and not be used again.
 */
void adaptrev_optimization_free(struct AdaptrevOptimization *opt);

/**
 * Best schedule and its value. Any out-pointer may be null.
 *
 * # Safety
 * `opt` must be valid.
 */
enum AdaptrevStatus adaptrev_optimization_best(const struct AdaptrevOptimization *opt,
                                               double *out_x,
                                               uint32_t *out_z,
                                               double *out_total,
                                               double *out_value);

/**
 * Number of grid points in the sweep trace (0 for a null handle).
 *
 * # Safety
 * `opt` must be valid or null.
 */
size_t adaptrev_optimization_trace_len(const struct AdaptrevOptimization *opt);

/**
 * Trace row `index`: step size, optimal step count, total and revenue.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AdaptrevStatus adaptrev_optimization_trace_point(const struct AdaptrevOptimization *opt,
                                                      size_t index,
                                                      double *out_x,
                                                      uint32_t *out_z,
                                                      double *out_total,
                                                      double *out_pi);

/**
 * Simulates `n_users` users facing `z` increases of size `x` under `curve`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AdaptrevStatus adaptrev_simulate(const struct AdaptrevCurve *curve,
                                      double x,
                                      uint32_t z,
                                      uint64_t n_users,
                                      uint64_t seed,
                                      struct AdaptrevCohort **out);

/**
 * # Safety
 * `cohort` must come from `adaptrev_simulate` and not be used again.
 */
void adaptrev_cohort_free(struct AdaptrevCohort *cohort);

/**
 * Number of periods including the starting one, `z + 1` (0 for null).
 *
 * # Safety
 * `cohort` must be valid or null.
 */
size_t adaptrev_cohort_periods(const struct AdaptrevCohort *cohort);

/**
 * Survivors after `period` increases and the 95% Wilson interval of the
 * surviving fraction. Interval pointers may be null.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AdaptrevStatus adaptrev_cohort_survivors(const struct AdaptrevCohort *cohort,
                                              size_t period,
                                              uint64_t *out_survivors,
                                              double *out_ci_lo,
                                              double *out_ci_hi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADAPTREV_H */
