#ifndef DMIM_H
#define DMIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum DmimStatus {
  DMIM_STATUS_OK = 0,
  DMIM_STATUS_NULL_POINTER = 1,
  DMIM_STATUS_INVALID_ARGUMENT = 2,
  DMIM_STATUS_NOT_NORMALIZED = 3,
  DMIM_STATUS_MISSING_VARIANCE = 4,
  DMIM_STATUS_NON_CONVERGENT = 5,
  DMIM_STATUS_UNSUPPORTED = 6,
  DMIM_STATUS_PANIC = 7,
} DmimStatus;

/**
 * Opaque distribution handle.
 */
typedef struct DmimDistribution DmimDistribution;

/**
 * Opaque empirical CDF handle.
 */
typedef struct DmimEcdf DmimEcdf;

/**
 * Density callback for custom distributions.
 */
typedef double (*DmimDensityFn)(double x, void *user_data);

/**
 * Sample-size plan.
 */
typedef struct DmimPlan {
  uint64_t n;
  double d;
  double sigma;
  double epsilon;
  double beta;
  /**
   * Closed-form bound on `P{D_n > d}` at the planned `(n, d)`.
   */
  double tail_bound;
} DmimPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *dmim_last_error(void);

enum DmimStatus dmim_uniform_new(double a, double b, struct DmimDistribution **out);

enum DmimStatus dmim_normal_new(double mu, double sigma, struct DmimDistribution **out);

enum DmimStatus dmim_exponential_new(double lambda, struct DmimDistribution **out);

/**
 * Custom density on `[lower, upper]` (either may be infinite). `mean` and
 * `variance` may be NaN when unknown. The callback must be thread-safe and
 * `user_data` must outlive the handle.
 *
 * # Safety
 * `density` must be callable with any `x` in the support and `user_data`.
 */
enum DmimStatus dmim_custom_new(DmimDensityFn density,
                                void *user_data,
                                double lower,
                                double upper,
                                double mean,
                                double variance,
                                struct DmimDistribution **out);

/**
 * # Safety
 * `dist` must be null or a handle not yet freed.
 */
void dmim_distribution_free(struct DmimDistribution *dist);

/**
 * # Safety
 * `dist` must be a live handle; `out` must be writable.
 */
enum DmimStatus dmim_density(const struct DmimDistribution *dist, double x, double *out);

/**
 * # Safety
 * `dist` must be a live handle; `out` must be writable.
 */
enum DmimStatus dmim_cdf(const struct DmimDistribution *dist, double x, double *out);

/**
 * DMIM `∫ f e^{-f}`.
 *
 * # Safety
 * `dist` must be a live handle; `out` must be writable.
 */
enum DmimStatus dmim_value(const struct DmimDistribution *dist, double *out);

/**
 * DMIM by adaptive quadrature with the given tolerances.
 *
 * # Safety
 * `dist` must be a live handle; `out` must be writable.
 */
enum DmimStatus dmim_value_quadrature(const struct DmimDistribution *dist,
                                      double abs_tol,
                                      double rel_tol,
                                      double *out);

/**
 * # Safety
 * `dist` must be a live handle; `out` must be writable.
 */
enum DmimStatus dmim_variance(const struct DmimDistribution *dist, double *out);

/**
 * Rényi entropy of order `alpha` (> 0, ≠ 1).
 *
 * # Safety
 * `dist` must be a live handle; `out` must be writable.
 */
enum DmimStatus dmim_renyi_entropy(const struct DmimDistribution *dist, double alpha, double *out);

/**
 * `m`-term Rényi partial sum; `bound` receives its truncation certificate.
 *
 * # Safety
 * `dist` must be a live handle; `out` and `bound` must be writable.
 */
enum DmimStatus dmim_renyi_series(const struct DmimDistribution *dist,
                                  size_t m,
                                  double *out,
                                  double *bound);

/**
 * Normal DMIM by power series; `bound` receives the truncation bound and
 * may be null.
 *
 * # Safety
 * `out` must be writable; `bound` must be null or writable.
 */
enum DmimStatus dmim_normal_series(double sigma, double tol, double *out, double *bound);

/**
 * Builds an empirical CDF from `len` samples (copied).
 *
 * # Safety
 * `samples` must point to `len` readable doubles; `out` must be writable.
 */
enum DmimStatus dmim_ecdf_new(const double *samples, size_t len, struct DmimEcdf **out);

/**
 * # Safety
 * `ecdf` must be null or a handle not yet freed.
 */
void dmim_ecdf_free(struct DmimEcdf *ecdf);

/**
 * # Safety
 * `ecdf` must be a live handle; `out` must be writable.
 */
enum DmimStatus dmim_ecdf_evaluate(const struct DmimEcdf *ecdf, double x, double *out);

/**
 * KS statistic of the sample against the distribution's CDF. Custom
 * distributions are not supported.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum DmimStatus dmim_ks_statistic(const struct DmimEcdf *ecdf,
                                  const struct DmimDistribution *dist,
                                  double *out);

/**
 * Asymptotic Kolmogorov tail `P{D_n > d}`; `k_max` terms (0 = default).
 */
double dmim_ks_tail_series(uint64_t n, double d, size_t k_max);

/**
 * # Safety
 * `out` must be writable.
 */
enum DmimStatus dmim_ks_tail_bound(uint64_t n, double d, double *out);

/**
 * Samples needed for DMIM deviation `epsilon`. Pass NaN for `l_x` to get
 * the distribution-free count.
 *
 * # Safety
 * `out` must be writable.
 */
enum DmimStatus dmim_required_samples(double epsilon, double sigma, double l_x, uint64_t *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum DmimStatus dmim_d_from(double epsilon, double beta, double sigma, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum DmimStatus dmim_epsilon_from(double d, double beta, double sigma, double *out);

/**
 * Confidence level for `(d, ε, σ)`. `achievable` (may be null) is set to 1
 * when the result lies in the range where the relation is valid.
 *
 * # Safety
 * `out` must be writable; `achievable` must be null or writable.
 */
enum DmimStatus dmim_beta_from(double d,
                               double epsilon,
                               double sigma,
                               double *out,
                               int32_t *achievable);

/**
 * # Safety
 * `dist` must be a live handle; `out` must be writable.
 */
enum DmimStatus dmim_make_plan(const struct DmimDistribution *dist,
                               double epsilon,
                               double beta,
                               struct DmimPlan *out);

/**
 * Fills `buf` with `len` draws. The same `(distribution, len, seed)` gives
 * the same values on every platform.
 *
 * # Safety
 * `dist` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum DmimStatus dmim_sample(const struct DmimDistribution *dist,
                            uint64_t seed,
                            double *buf,
                            size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DMIM_H */
