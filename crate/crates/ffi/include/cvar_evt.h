#ifndef CVAR_EVT_H
#define CVAR_EVT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum CvarEvtStatus {
  CVAR_EVT_STATUS_OK = 0,
  CVAR_EVT_STATUS_NULL_POINTER = 1,
  CVAR_EVT_STATUS_INVALID_ARGUMENT = 2,
  CVAR_EVT_STATUS_DOMAIN = 3,
  CVAR_EVT_STATUS_COMPUTATION = 4,
  CVAR_EVT_STATUS_PANIC = 5,
} CvarEvtStatus;

typedef enum CvarEvtKernel {
  CVAR_EVT_KERNEL_CVAR = 0,
  CVAR_EVT_KERNEL_VAR = 1,
} CvarEvtKernel;

typedef enum CvarEvtObjective {
  CVAR_EVT_OBJECTIVE_VARIANCE = 0,
  CVAR_EVT_OBJECTIVE_ABS_BIAS = 1,
  CVAR_EVT_OBJECTIVE_REG_MSE = 2,
  CVAR_EVT_OBJECTIVE_AMSE = 3,
} CvarEvtObjective;

// Result of the bootstrap calibration of `r`.
typedef struct CvarEvtRPath CvarEvtRPath;

// A sample prepared for estimation (sorted order statistics and CVaR
// sequence).
typedef struct CvarEvtSample CvarEvtSample;

// Stage-two output of the adaptive estimators.
typedef struct CvarEvtAdaptive {
  double gamma;
  double gamma_bar;
  double alpha;
  double beta;
} CvarEvtAdaptive;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next call into the library on this thread.
const char *cvar_evt_last_error(void);

// Copy `len` values from `data` into a new sample handle.
//
// # Safety
// `data` must point to `len` readable doubles; `out` must be writable.
enum CvarEvtStatus cvar_evt_sample_new(const double *data, size_t len, struct CvarEvtSample **out);

// # Safety
// `sample` must come from [`cvar_evt_sample_new`] and not be used afterwards.
void cvar_evt_sample_free(struct CvarEvtSample *sample);

// Sample size, or 0 for a null handle.
//
// # Safety
// `sample` must be null or a live handle.
size_t cvar_evt_sample_len(const struct CvarEvtSample *sample);

// CVaR-based smoothed estimate with a beta measure.
//
// # Safety
// `sample` must be a live handle and `out` writable.
enum CvarEvtStatus cvar_evt_estimate_cvar_smoothed(const struct CvarEvtSample *sample,
                                                   double c,
                                                   size_t m,
                                                   double alpha,
                                                   double beta,
                                                   double *out);

// Order-statistic (VaR) smoothed estimate with a beta measure.
//
// # Safety
// `sample` must be a live handle and `out` writable.
enum CvarEvtStatus cvar_evt_estimate_var_smoothed(const struct CvarEvtSample *sample,
                                                  double c,
                                                  size_t m,
                                                  double alpha,
                                                  double beta,
                                                  double *out);

// Pickands-type estimate on the CVaR sequence.
//
// # Safety
// `sample` must be a live handle and `out` writable.
enum CvarEvtStatus cvar_evt_estimate_pickands_yun(const struct CvarEvtSample *sample,
                                                  double u,
                                                  double v,
                                                  size_t m,
                                                  double *out);

// Two-stage estimate whose stage-two measure minimizes the variance
// (`objective = Variance`) or the regularized MSE (`objective = RegMse`).
//
// # Safety
// `sample` must be a live handle and `out` writable.
enum CvarEvtStatus cvar_evt_estimate_adaptive(const struct CvarEvtSample *sample,
                                              enum CvarEvtKernel kernel,
                                              double c,
                                              size_t m,
                                              enum CvarEvtObjective objective,
                                              double rho_bar,
                                              struct CvarEvtAdaptive *out);

// Optimal beta measure. `m`, `n` are used by RegMse, `m`, `r` by Amse.
//
// # Safety
// `alpha`, `beta` and `value` must be writable.
enum CvarEvtStatus cvar_evt_optimize_measure(double gamma,
                                             double rho,
                                             double c,
                                             enum CvarEvtObjective objective,
                                             enum CvarEvtKernel kernel,
                                             size_t m,
                                             size_t n,
                                             double r,
                                             double *alpha,
                                             double *beta,
                                             double *value);

// Asymptotic variance of the smoothed estimator with a beta measure.
//
// # Safety
// `out` must be writable.
enum CvarEvtStatus cvar_evt_asymptotic_variance(enum CvarEvtKernel kernel,
                                                double gamma,
                                                double c,
                                                double alpha,
                                                double beta,
                                                double *out);

// Bootstrap calibration path of `r` up to `m0` with default step sizes.
//
// # Safety
// `sample` must be a live handle and `out` writable.
enum CvarEvtStatus cvar_evt_estimate_r(const struct CvarEvtSample *sample,
                                       size_t m0,
                                       size_t bootstrap,
                                       double c,
                                       double rho_bar,
                                       uint64_t seed,
                                       struct CvarEvtRPath **out);

// Number of entries, or 0 for a null handle.
//
// # Safety
// `path` must be null or a live handle.
size_t cvar_evt_rpath_len(const struct CvarEvtRPath *path);

// Entry `i` of the path.
//
// # Safety
// `path` must be a live handle; `m` and `r_hat` writable.
enum CvarEvtStatus cvar_evt_rpath_get(const struct CvarEvtRPath *path,
                                      size_t i,
                                      size_t *m,
                                      double *r_hat);

// # Safety
// `path` must come from [`cvar_evt_estimate_r`] and not be used afterwards.
void cvar_evt_rpath_free(struct CvarEvtRPath *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVAR_EVT_H */
