/* SPDX-License-Identifier: MIT OR Apache-2.0 */

#ifndef CPFIND_H
#define CPFIND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CpfStatus {
  CPF_STATUS_OK = 0,
  CPF_STATUS_NULL_POINTER = 1,
  CPF_STATUS_INVALID_ARGUMENT = 2,
  CPF_STATUS_SEGMENT_TOO_SMALL = 3,
  CPF_STATUS_ESTIMATION_FAILED = 4,
  CPF_STATUS_PANIC = 5,
} CpfStatus;

typedef enum CpfTarget {
  CPF_TARGET_MEAN = 0,
  CPF_TARGET_VARIANCE = 1,
  CPF_TARGET_JOINT = 2,
} CpfTarget;

typedef enum CpfDgp {
  CPF_DGP_WHITE_NOISE = 0,
  CPF_DGP_ARMA_GARCH = 1,
  CPF_DGP_TAR = 2,
} CpfDgp;

typedef enum CpfNoise {
  CPF_NOISE_NORMAL = 0,
  CPF_NOISE_STUDENT_T = 1,
  CPF_NOISE_POWER_LAW = 2,
} CpfNoise;

/**
 * Opaque set of detected breaks.
 */
typedef struct CpfBreakSet CpfBreakSet;

/**
 * Opaque observed series.
 */
typedef struct CpfSample CpfSample;

/**
 * Outcome of a single mean or variance test.
 */
typedef struct CpfTestOutcome {
  double statistic;
  double critical_value;
  /**
   * Grid size entering the critical value.
   */
  size_t m;
  bool reject;
  double argmax_x;
  double bandwidth;
  /**
   * Estimate of `E(eps^4) - 1`; NaN for the mean test.
   */
  double nu_epsilon;
} CpfTestOutcome;

/**
 * Holm combination of the mean and variance tests.
 */
typedef struct CpfJointOutcome {
  struct CpfTestOutcome mean;
  struct CpfTestOutcome variance;
  double t_max;
  double t_min;
  double critical_value_half;
  bool reject_any;
  bool reject_mean;
  bool reject_variance;
} CpfJointOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cpf_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cpf_version(void);

/**
 * Copies `len` paired observations into a new sample. Times are `0..len`.
 *
 * # Safety
 * `y` and `x` must be valid for reads of `len` values; `out` must be a
 * valid pointer.
 */
enum CpfStatus cpf_sample_new(const double *y, const double *x, size_t len, struct CpfSample **out);

/**
 * Number of observations, or 0 for a null handle.
 *
 * # Safety
 * `sample` must be null or a live handle.
 */
size_t cpf_sample_len(const struct CpfSample *sample);

/**
 * # Safety
 * `sample` must be null or a handle not yet freed.
 */
void cpf_sample_free(struct CpfSample *sample);

/**
 * Mean test (`target` Mean) or variance test (`target` Variance) splitting
 * the sample before index `split`.
 *
 * # Safety
 * `sample` must be a live handle and `out` a valid pointer.
 */
enum CpfStatus cpf_test(const struct CpfSample *sample,
                        size_t split,
                        enum CpfTarget target,
                        double alpha,
                        struct CpfTestOutcome *out);

/**
 * Joint mean-and-variance test.
 *
 * # Safety
 * `sample` must be a live handle and `out` a valid pointer.
 */
enum CpfStatus cpf_test_joint(const struct CpfSample *sample,
                              size_t split,
                              double alpha,
                              struct CpfJointOutcome *out);

/**
 * Runs the two-stage detector. `min_gap` of 0 means `l_min`.
 *
 * # Safety
 * `sample` must be a live handle and `out` a valid pointer.
 */
enum CpfStatus cpf_detect(const struct CpfSample *sample,
                          size_t l_min,
                          double alpha,
                          enum CpfTarget target,
                          size_t min_gap,
                          struct CpfBreakSet **out);

/**
 * Number of breaks, or 0 for a null handle.
 *
 * # Safety
 * `set` must be null or a live handle.
 */
size_t cpf_breakset_len(const struct CpfBreakSet *set);

/**
 * Index of break `i` (the first observation of the new regime).
 *
 * # Safety
 * `set` must be a live handle and `index` a valid pointer.
 */
enum CpfStatus cpf_breakset_get(const struct CpfBreakSet *set, size_t i, size_t *index);

/**
 * # Safety
 * `set` must be null or a handle not yet freed.
 */
void cpf_breakset_free(struct CpfBreakSet *set);

/**
 * Quantile of the limiting law `exp(-2 exp(-z))` at `1 - alpha`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CpfStatus cpf_gumbel_quantile(double alpha, double *out);

/**
 * Critical value `B_m(z)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CpfStatus cpf_critical_value(size_t m, double z, double *out);

/**
 * Synthetic series of length `n` with breaks at `breaks[0..n_breaks]` and
 * regression laws `segment_ids[0..=n_breaks]` (values 1 to 5).
 *
 * # Safety
 * `breaks` must be valid for `n_breaks` reads, `segment_ids` for
 * `n_breaks + 1` reads, and `out` must be a valid pointer.
 */
enum CpfStatus cpf_synthesize(enum CpfDgp dgp,
                              enum CpfNoise noise,
                              size_t n,
                              uint64_t seed,
                              const size_t *breaks,
                              size_t n_breaks,
                              const uint8_t *segment_ids,
                              struct CpfSample **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPFIND_H */
