#ifndef SGMIX_H
#define SGMIX_H

/* Generated by cbindgen from sgmix-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SgmixStatus {
  SGMIX_STATUS_OK = 0,
  SGMIX_STATUS_NULL_POINTER = 1,
  SGMIX_STATUS_INVALID_ARGUMENT = 2,
  SGMIX_STATUS_NUMERIC = 3,
  SGMIX_STATUS_DEGENERATE_INPUT = 4,
  SGMIX_STATUS_IO = 5,
  SGMIX_STATUS_PARSE = 6,
  SGMIX_STATUS_CONVERGENCE = 7,
  SGMIX_STATUS_PANIC = 8,
} SgmixStatus;

/**
 * Posterior summaries of a univariate regression fit.
 */
typedef struct SgmixFit SgmixFit;

/**
 * Seeded random number generator.
 */
typedef struct SgmixRng SgmixRng;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len - 1` bytes) and returns the full message
 * length without the terminator. Returns 0 when no error is recorded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sgmix_last_error_message(char *buf, size_t len);

/**
 * Returns a generator for stream `stream` of master seed `seed`. Never null.
 */
struct SgmixRng *sgmix_rng_new(uint64_t seed, uint64_t stream);

/**
 * # Safety
 * `rng` must be null or come from [`sgmix_rng_new`] and not be freed twice.
 */
void sgmix_rng_free(struct SgmixRng *rng);

/**
 * Raw moment `E[X^order]` of `SGa(a, b)`.
 *
 * # Safety
 * `out` must point to a writable double.
 */
enum SgmixStatus sgmix_sga_moment(double a, double b, uint32_t order, double *out);

/**
 * Fills `out[0..n]` with `SGa(a, b)` draws.
 *
 * # Safety
 * `rng` must be a live handle and `out` must hold `n` doubles.
 */
enum SgmixStatus sgmix_sga_sample(struct SgmixRng *rng, double a, double b, double *out, size_t n);

/**
 * Symmlet-8 mother wavelet at `x[0..n]`.
 *
 * # Safety
 * `x` and `out` must hold `n` doubles.
 */
enum SgmixStatus sgmix_symmlet8(const double *x, double *out, size_t n);

/**
 * Radon transform at `(r, theta)` of the Gaussian atom centred at
 * `(mu_x, mu_y)` with shearlet dilation parameters `a > 0` and `s`.
 *
 * # Safety
 * `out` must point to a writable double.
 */
enum SgmixStatus sgmix_radon_gaussian(double mu_x,
                                      double mu_y,
                                      double a,
                                      double s,
                                      double r,
                                      double theta,
                                      double *out);

/**
 * Geweke Z statistic comparing the first `frac_a` and last `frac_b` of
 * `series[0..n]`.
 *
 * # Safety
 * `series` must hold `n` doubles and `z` must be writable.
 */
enum SgmixStatus sgmix_geweke_z(const double *series,
                                size_t n,
                                double frac_a,
                                double frac_b,
                                double *z);

/**
 * Effective sample size of `series[0..n]`.
 *
 * # Safety
 * `series` must hold `n` doubles and `out` must be writable.
 */
enum SgmixStatus sgmix_ess(const double *series, size_t n, double *out);

/**
 * Fits `y = f(x) + noise` with a Gaussian location-scale mixture and
 * default regression settings, `p` particles and at most `max_iterations`
 * sweeps. On success `*fit` receives a handle to release with
 * [`sgmix_fit_free`].
 *
 * # Safety
 * `x` and `y` must hold `n` doubles and `fit` must be writable.
 */
enum SgmixStatus sgmix_fit_regression(const double *x,
                                      const double *y,
                                      size_t n,
                                      size_t p,
                                      size_t max_iterations,
                                      uint64_t seed,
                                      struct SgmixFit **fit);

/**
 * Number of design points in the fit, 0 for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t sgmix_fit_len(const struct SgmixFit *fit);

/**
 * Copies the posterior mean and the 95% band, each of length
 * [`sgmix_fit_len`]. Any output pointer may be null to skip it.
 *
 * # Safety
 * `fit` must be a live handle; non-null outputs must hold `len` doubles.
 */
enum SgmixStatus sgmix_fit_curves(const struct SgmixFit *fit,
                                  double *mean,
                                  double *lower,
                                  double *upper,
                                  size_t len);

/**
 * Posterior mean of the noise variance.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double sgmix_fit_sigma2(const struct SgmixFit *fit);

/**
 * # Safety
 * `fit` must be null or come from [`sgmix_fit_regression`] and not be
 * freed twice.
 */
void sgmix_fit_free(struct SgmixFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGMIX_H */
