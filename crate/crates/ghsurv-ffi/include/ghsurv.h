#ifndef GHSURV_H
#define GHSURV_H

/* Generated by cbindgen from the ghsurv-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of an interface call.
 */
typedef enum GhsStatus {
  /**
   * Success.
   */
  GHS_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  GHS_STATUS_NULL_ARGUMENT = 1,
  /**
   * Arguments were structurally invalid (bad sizes, unknown names,
   * malformed data).
   */
  GHS_STATUS_INVALID_INPUT = 2,
  /**
   * Optimization did not converge.
   */
  GHS_STATUS_NON_CONVERGENCE = 3,
  /**
   * A numeric routine (quadrature, inversion, diagnostics) failed.
   */
  GHS_STATUS_NUMERIC_FAILURE = 4,
  /**
   * A panic was caught at the boundary.
   */
  GHS_STATUS_PANIC = 5,
} GhsStatus;

/**
 * Right-censored dataset handle.
 */
typedef struct GhsDataset GhsDataset;

/**
 * Fitted-model handle.
 */
typedef struct GhsFit GhsFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ghs_version(void);

/**
 * Detail message for the most recent failing call on this thread, or NULL.
 * The pointer is invalidated by the next interface call on the same thread.
 */
const char *ghs_last_error_message(void);

/**
 * Builds a dataset from flat arrays.
 *
 * `times` (length `n`) are strictly positive; `status` (length `n`) is 0
 * (censored) or 1 (event). `x` is the hazard-level design, row-major
 * `n * p`; `xtilde` the time-level design, row-major `n * q`. `x` may be
 * NULL iff `p == 0`, likewise `xtilde`/`q`. On success `*out` owns the
 * copied data.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum GhsStatus ghs_dataset_new(const double *times,
                               const int *status,
                               size_t n,
                               const double *x,
                               size_t p,
                               const double *xtilde,
                               size_t q,
                               struct GhsDataset **out);

/**
 * Releases a dataset handle. NULL is ignored.
 *
 * # Safety
 * `ds` must come from `ghs_dataset_new` and not be freed twice.
 */
void ghs_dataset_free(struct GhsDataset *ds);

/**
 * Number of rows; 0 for NULL.
 *
 * # Safety
 * `ds` must be a live dataset handle or NULL.
 */
size_t ghs_dataset_rows(const struct GhsDataset *ds);

/**
 * Number of uncensored rows; 0 for NULL.
 *
 * # Safety
 * `ds` must be a live dataset handle or NULL.
 */
size_t ghs_dataset_events(const struct GhsDataset *ds);

/**
 * Fits a model by maximum likelihood.
 *
 * `family` is one of "weibull", "pgw", "ew", "gg", "lognormal"; `structure`
 * one of "gh", "ph", "aft", "ah". `seed` drives the multistart jitters. On
 * `GHS_STATUS_OK` the caller owns `*out`; a fit whose convergence filter
 * failed still returns OK with `ghs_fit_converged` reporting 0.
 *
 * # Safety
 * Pointers must be valid; strings must be NUL-terminated.
 */
enum GhsStatus ghs_fit(const struct GhsDataset *ds,
                       const char *family,
                       const char *structure,
                       uint64_t seed,
                       struct GhsFit **out);

/**
 * Releases a fit handle. NULL is ignored.
 *
 * # Safety
 * `fit` must come from `ghs_fit` and not be freed twice.
 */
void ghs_fit_free(struct GhsFit *fit);

/**
 * Maximized log-likelihood; NaN for NULL.
 *
 * # Safety
 * `fit` must be a live fit handle or NULL.
 */
double ghs_fit_loglik(const struct GhsFit *fit);

/**
 * Akaike information criterion; NaN for NULL.
 *
 * # Safety
 * `fit` must be a live fit handle or NULL.
 */
double ghs_fit_aic(const struct GhsFit *fit);

/**
 * 1 when the convergence filter passed, else 0.
 *
 * # Safety
 * `fit` must be a live fit handle or NULL.
 */
int ghs_fit_converged(const struct GhsFit *fit);

/**
 * Free-parameter count entering the AIC; 0 for NULL.
 *
 * # Safety
 * `fit` must be a live fit handle or NULL.
 */
size_t ghs_fit_n_params(const struct GhsFit *fit);

/**
 * Length of the full natural-scale vector (baseline, alpha, beta) including
 * entries a constrained structure pins at zero; 0 for NULL.
 *
 * # Safety
 * `fit` must be a live fit handle or NULL.
 */
size_t ghs_fit_n_theta(const struct GhsFit *fit);

/**
 * Copies the natural-scale estimates (baseline, then alpha, then beta) into
 * `buf`. `cap` is the buffer capacity in doubles; the required count is
 * `ghs_fit_n_theta`. `*written` receives the count on success.
 *
 * # Safety
 * `buf` must be valid for `cap` doubles.
 */
enum GhsStatus ghs_fit_params(const struct GhsFit *fit, double *buf, size_t cap, size_t *written);

/**
 * Serializes the full fit (estimates, likelihood, Hessians, trace) as JSON.
 *
 * # Safety
 * `fit` must be a live fit handle; `out` valid.
 */
enum GhsStatus ghs_fit_json(const struct GhsFit *fit, char **out);

/**
 * Runs the near-redundancy diagnosis on a converged fit with default
 * settings and serializes the report as JSON.
 *
 * # Safety
 * `fit` must be a live fit handle; `out` valid.
 */
enum GhsStatus ghs_diagnose_json(const struct GhsFit *fit, char **out);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void ghs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GHSURV_H */
