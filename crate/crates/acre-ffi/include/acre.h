#ifndef ACRE_H
#define ACRE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum AcreStatus {
  ACRE_STATUS_OK = 0,
  ACRE_STATUS_NULL_POINTER = 1,
  ACRE_STATUS_DOMAIN = 2,
  ACRE_STATUS_UNSUPPORTED = 3,
  ACRE_STATUS_CONSISTENCY = 4,
  ACRE_STATUS_CONFIG = 5,
  ACRE_STATUS_IO = 6,
  ACRE_STATUS_PANIC = 7,
  ACRE_STATUS_BUFFER_TOO_SMALL = 8,
} AcreStatus;

typedef enum AcreBoundary {
  ACRE_BOUNDARY_FREE = 0,
  /**
   * Parameters c1, c2; pass INFINITY to truncate a side.
   */
  ACRE_BOUNDARY_INTERPOLATED = 1,
  /**
   * Parameters tau1, tau2.
   */
  ACRE_BOUNDARY_HARD_ANNULUS = 2,
  /**
   * Parameter tau.
   */
  ACRE_BOUNDARY_HARD_DISK = 3,
} AcreBoundary;

typedef enum AcreVariant {
  ACRE_VARIANT_FREE = 0,
  ACRE_VARIANT_SOFT_HARD = 1,
  /**
   * Parameters c1, c2.
   */
  ACRE_VARIANT_INTERPOLATED = 2,
  /**
   * Parameters tau1, tau2.
   */
  ACRE_VARIANT_HARD_ANNULUS = 3,
  /**
   * Parameter tau in `p1`.
   */
  ACRE_VARIANT_HARD_DISK_OUTER = 4,
  /**
   * Parameter tau in `p1`.
   */
  ACRE_VARIANT_HARD_DISK_RESCALED = 5,
  ACRE_VARIANT_GINIBRE_SOFT_HARD = 6,
  ACRE_VARIANT_GINIBRE_HARD = 7,
} AcreVariant;

/**
 * Finite-n ensemble with its norm table and default zoom.
 */
typedef struct AcreEnsemble AcreEnsemble;

/**
 * Limiting correlation structure.
 */
typedef struct AcreLimit AcreLimit;

/**
 * Exact moduli sampler.
 */
typedef struct AcreSampler AcreSampler;

/**
 * Library version as a static NUL-terminated string.
 */
const char *acre_version(void);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated).
 * Returns the full message length in bytes, excluding the NUL; 0 if none.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t acre_last_error(char *buf, size_t len);

/**
 * Induced Ginibre ensemble of size n and width rho under a boundary condition.
 *
 * # Safety
 * `handle_out` must be a valid pointer.
 */
enum AcreStatus acre_ensemble_new(size_t n,
                                  double rho,
                                  enum AcreBoundary bc,
                                  double p1,
                                  double p2,
                                  struct AcreEnsemble **handle_out);

/**
 * Ensemble from the flat key=value config text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `handle_out` a valid pointer.
 */
enum AcreStatus acre_ensemble_from_config(const char *text, struct AcreEnsemble **handle_out);

/**
 * # Safety
 * `h` must be null or a handle from `acre_ensemble_new*`, not yet freed.
 */
void acre_ensemble_free(struct AcreEnsemble *h);

/**
 * Natural log of the squared weighted norm of z^j.
 *
 * # Safety
 * `h` and `value_out` must be valid pointers.
 */
enum AcreStatus acre_ensemble_log_norm(const struct AcreEnsemble *h, size_t j, double *value_out);

/**
 * Rescaled 1-point function at z = x + iy.
 *
 * # Safety
 * `h` and `value_out` must be valid pointers.
 */
enum AcreStatus acre_ensemble_rho1(const struct AcreEnsemble *h,
                                   double x,
                                   double y,
                                   double *value_out);

/**
 * P(max modulus ≤ r).
 *
 * # Safety
 * `h` and `value_out` must be valid pointers.
 */
enum AcreStatus acre_ensemble_max_cdf(const struct AcreEnsemble *h, double r, double *value_out);

/**
 * P(min modulus ≥ r).
 *
 * # Safety
 * `h` and `value_out` must be valid pointers.
 */
enum AcreStatus acre_ensemble_min_survival(const struct AcreEnsemble *h,
                                           double r,
                                           double *value_out);

/**
 * Limit variant; unused parameters are ignored.
 *
 * # Safety
 * `handle_out` must be a valid pointer.
 */
enum AcreStatus acre_limit_new(enum AcreVariant variant,
                               double rho,
                               double p1,
                               double p2,
                               struct AcreLimit **handle_out);

/**
 * # Safety
 * `h` must be null or a handle from `acre_limit_new`, not yet freed.
 */
void acre_limit_free(struct AcreLimit *h);

/**
 * Limiting 1-point function at Re z = x.
 *
 * # Safety
 * `h` and `value_out` must be valid pointers.
 */
enum AcreStatus acre_limit_density(const struct AcreLimit *h, double x, double *value_out);

/**
 * Limiting kernel K(z, w).
 *
 * # Safety
 * `h`, `re_out` and `im_out` must be valid pointers.
 */
enum AcreStatus acre_limit_kernel(const struct AcreLimit *h,
                                  double z_re,
                                  double z_im,
                                  double w_re,
                                  double w_im,
                                  double *re_out,
                                  double *im_out);

/**
 * Max Ward residual over the square [lo, hi]² sampled with `spacing`.
 *
 * # Safety
 * `h` and `value_out` must be valid pointers.
 */
enum AcreStatus acre_limit_ward_max_residual(const struct AcreLimit *h,
                                             double lo,
                                             double hi,
                                             double spacing,
                                             double step,
                                             double cutoff,
                                             double *value_out);

/**
 * Sampler over a copy of the ensemble.
 *
 * # Safety
 * `ens` and `handle_out` must be valid pointers.
 */
enum AcreStatus acre_sampler_new(const struct AcreEnsemble *ens,
                                 uint64_t seed,
                                 struct AcreSampler **handle_out);

/**
 * # Safety
 * `h` must be null or a handle from `acre_sampler_new`, not yet freed.
 */
void acre_sampler_free(struct AcreSampler *h);

/**
 * Max and min modulus of trials 0..trials into two caller buffers.
 *
 * # Safety
 * `h` must be valid; `max_out` and `min_out` must each hold `trials` doubles.
 */
enum AcreStatus acre_sampler_extremes(const struct AcreSampler *h,
                                      uint64_t trials,
                                      double *max_out,
                                      double *min_out);

/**
 * All n moduli of one trial into a caller buffer of `len` doubles.
 *
 * # Safety
 * `h` must be valid; `moduli_out` must hold `len` doubles.
 */
enum AcreStatus acre_sampler_moduli(const struct AcreSampler *h,
                                    uint64_t trial,
                                    double *moduli_out,
                                    size_t len);

#endif  /* ACRE_H */
