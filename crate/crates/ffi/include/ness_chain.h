#ifndef NESS_CHAIN_H
#define NESS_CHAIN_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum NessStatus {
  NESS_STATUS_OK = 0,
  NESS_STATUS_INVALID_ARGUMENT = 1,
  NESS_STATUS_NULL_POINTER = 2,
  NESS_STATUS_INDEX_OUT_OF_RANGE = 3,
  NESS_STATUS_BUFFER_TOO_SMALL = 4,
  NESS_STATUS_SOLVER_FAILURE = 5,
  NESS_STATUS_NUMERICAL_FAILURE = 6,
  NESS_STATUS_PANIC = 7,
} NessStatus;

// Per-site columns, indexed `x = 0..=n`.
typedef enum NessColumn {
  NESS_COLUMN_MEAN_R = 0,
  NESS_COLUMN_MEAN_P = 1,
  NESS_COLUMN_PP = 2,
  NESS_COLUMN_RR = 3,
  NESS_COLUMN_PP_LEFT = 4,
  NESS_COLUMN_ENERGY = 5,
  // NaN at `x = 0`.
  NESS_COLUMN_PHI = 6,
  NESS_COLUMN_CURRENT = 7,
} NessColumn;

// Simulator estimates.
typedef struct NessEstimates NessEstimates;

// Exact stationary moments.
typedef struct NessMoments NessMoments;

// Chain parameters with constant tension `tau`.
typedef struct NessParams {
  uintptr_t n;
  double gamma;
  double gamma_tilde;
  double tau;
  double t_minus;
  double t_plus;
} NessParams;

typedef struct NessStationary {
  double j_ss;
  double u_max;
  double e_th_max;
  bool interior;
} NessStationary;

typedef struct NessSimConfig {
  double dt;
  double t_burnin;
  double t_measure;
  uintptr_t n_replicas;
  uint64_t seed;
  uintptr_t n_batches;
  uintptr_t sample_every;
} NessSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *ness_version(void);

// Message of the last failure on this thread. Valid until the next failing
// call on the same thread; empty if none.
const char *ness_last_error(void);

// Solves for the exact stationary moments.
//
// # Safety
// `params` must point to a valid `NessParams`; `out` must be writable.
enum NessStatus ness_moments_solve(const struct NessParams *params, struct NessMoments **out);

// # Safety
// `h` must come from `ness_moments_solve` and not be freed twice. Null is ignored.
void ness_moments_free(struct NessMoments *h);

// Number of springs, 0 for a null handle.
//
// # Safety
// `h` must be null or a live handle.
uintptr_t ness_moments_n(const struct NessMoments *h);

// State dimension `2n + 1`, 0 for a null handle.
//
// # Safety
// `h` must be null or a live handle.
uintptr_t ness_moments_dim(const struct NessMoments *h);

// Scalar summaries: left boundary current, average momentum and solver residual.
//
// # Safety
// `h` must be a live handle; each output pointer may be null.
enum NessStatus ness_moments_summary(const struct NessMoments *h,
                                     double *jbar,
                                     double *pbar,
                                     double *residual);

// Mean of state coordinate `a` (`r_x` at `x-1`, `p_x` at `n+x`).
//
// # Safety
// `h` must be a live handle and `out` writable.
enum NessStatus ness_moments_mean(const struct NessMoments *h, uintptr_t a, double *out);

// Raw second moment `E[z_a z_b]`.
//
// # Safety
// `h` must be a live handle and `out` writable.
enum NessStatus ness_moments_second(const struct NessMoments *h,
                                    uintptr_t a,
                                    uintptr_t b,
                                    double *out);

// Copies column `col` (n + 1 values) into `buf`.
//
// # Safety
// `h` must be a live handle; `buf` must hold `len` doubles.
enum NessStatus ness_moments_profile(const struct NessMoments *h,
                                     enum NessColumn col,
                                     double *buf,
                                     uintptr_t len);

// Closed-form macroscopic stationary quantities (`n` is ignored but must be ≥ 2).
//
// # Safety
// `params` must be valid and `out` writable.
enum NessStatus ness_stationary_profiles(const struct NessParams *params,
                                         struct NessStationary *out);

// Default simulator settings for `params`.
//
// # Safety
// `params` must be valid and `out` writable.
enum NessStatus ness_sim_config_default(const struct NessParams *params, struct NessSimConfig *out);

// Runs the stationary simulation with the even-odd exchange sweep.
//
// # Safety
// `params` and `cfg` must be valid; `out` writable.
enum NessStatus ness_simulate(const struct NessParams *params,
                              const struct NessSimConfig *cfg,
                              struct NessEstimates **out);

// # Safety
// `h` must come from `ness_simulate` and not be freed twice. Null is ignored.
void ness_estimates_free(struct NessEstimates *h);

// Batch count and whether the run fell below the minimum batch count.
//
// # Safety
// `h` must be a live handle; output pointers may be null.
enum NessStatus ness_estimates_info(const struct NessEstimates *h,
                                    uintptr_t *batches,
                                    bool *flagged);

// Estimated left boundary current and its standard error.
//
// # Safety
// `h` must be a live handle; output pointers may be null.
enum NessStatus ness_estimates_jbar(const struct NessEstimates *h, double *value, double *std_err);

// Copies estimates and standard errors of column `col` (n + 1 values each).
//
// # Safety
// `h` must be a live handle; `values` and `std_errs` must hold `len` doubles.
enum NessStatus ness_estimates_column(const struct NessEstimates *h,
                                      enum NessColumn col,
                                      double *values,
                                      double *std_errs,
                                      uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NESS_CHAIN_H */
