#ifndef ZF_HGM_H
#define ZF_HGM_H

/* Generated by cbindgen from the zf-hgm-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result discriminant for every fallible entry point.
enum ZfHgmStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  ZF_HGM_STATUS_OK = 0,
  // A required pointer argument was null.
  ZF_HGM_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  ZF_HGM_STATUS_INVALID_UTF8 = 2,
  // Configuration rejected (shape, ranges, JSON schema).
  ZF_HGM_STATUS_INVALID_CONFIG = 3,
  // Mathematical domain violation (nonpositive t, bad parameters).
  ZF_HGM_STATUS_DOMAIN = 4,
  // Underlying I/O failure (correlation file).
  ZF_HGM_STATUS_IO = 5,
  // Series truncation failed to converge where convergence is required.
  ZF_HGM_STATUS_SERIES_NOT_CONVERGED = 6,
  // Integrator or quadrature failure.
  ZF_HGM_STATUS_NUMERICAL = 7,
  // An internal invariant was violated; the handle remains usable.
  ZF_HGM_STATUS_PANIC = 8,
};
#ifndef __cplusplus
typedef int32_t ZfHgmStatus;
#endif // __cplusplus

// Opaque scenario handle: validated configuration, correlation matrix, and
// the derived distribution parameters, ready for evaluation.
typedef struct ZfHgmModel ZfHgmModel;

// Derived distribution parameters of a scenario.
typedef struct ZfHgmDerived {
  // Diversity order N = n_rx - n_tx + 1.
  uint32_t dof;
  // Rician K-factor, linear scale; 0 in the Rayleigh limit.
  double k_linear;
  // Scale of the stream-1 SNR distribution, linear.
  double gamma1;
  // Noncentrality a; 0 exactly in the Rayleigh limit.
  double noncentrality;
  // Per-bit SNR in dB implied by the symbol SNR and constellation size.
  double gamma_b_db;
} ZfHgmDerived;

// Ergodic capacity together with the quadrature bookkeeping.
typedef struct ZfHgmCapacity {
  // Capacity in bits per channel use.
  double bpcu;
  // Density mass beyond the integration cutoff, bounded by tail_tol.
  double tail_mass_dropped;
  // Integration cutoff actually used, linear SNR.
  double t_max;
} ZfHgmCapacity;

// Summary statistics of one Monte Carlo run.
typedef struct ZfHgmSimSummary {
  // Requested sample count.
  uint64_t n_requested;
  // Draws rejected for numerically singular Gram matrices.
  uint64_t rejected;
  // Sample mean of the stream-1 SNR, linear.
  double mean_snr;
  // Sample mean of log2(1 + SNR).
  double capacity_bpcu;
  // Empirical fraction of samples at or below the threshold.
  double outage;
} ZfHgmSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a handle for the built-in default scenario (6x2, K = 7 dB,
// identity transmit correlation, symbol SNR 5 dB, QPSK).
//
// # Safety
// `out` must be a valid pointer; the returned handle must be released with
// `zf_hgm_model_free`.
ZfHgmStatus zf_hgm_model_default(struct ZfHgmModel **out);

// Creates a handle from a JSON scenario document (same schema as the CLI
// `--config` file).
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer; the
// returned handle must be released with `zf_hgm_model_free`.
ZfHgmStatus zf_hgm_model_from_json(const char *json, struct ZfHgmModel **out);

// Releases a handle. Passing null is a no-op.
//
// # Safety
// `handle` must have come from this library and not been freed before.
void zf_hgm_model_free(struct ZfHgmModel *handle);

// Copies the derived distribution parameters of the scenario.
//
// # Safety
// `handle` must be a live handle and `out` a valid pointer.
ZfHgmStatus zf_hgm_model_derived(const struct ZfHgmModel *handle, struct ZfHgmDerived *out);

// Evaluates the stream-1 SNR density at one point t >= 0 (linear SNR).
//
// # Safety
// `handle` must be a live handle and `out` a valid pointer.
ZfHgmStatus zf_hgm_pdf(const struct ZfHgmModel *handle, double t, double *out);

// Evaluates the density on `len` points in parallel. Points must be finite
// and nonnegative; `out` must hold `len` doubles. On failure no element of
// `out` is meaningful.
//
// # Safety
// `handle` must be a live handle; `ts` and `out` must point to `len`
// readable respectively writable doubles.
ZfHgmStatus zf_hgm_pdf_grid(const struct ZfHgmModel *handle,
                            const double *ts,
                            size_t len,
                            double *out);

// Outage probability P(SNR <= threshold), threshold in linear SNR.
// `resolution` is the quadrature panel count (>= 100).
//
// # Safety
// `handle` must be a live handle and `out` a valid pointer.
ZfHgmStatus zf_hgm_outage(const struct ZfHgmModel *handle,
                          double threshold,
                          uint32_t resolution,
                          double *out);

// Ergodic capacity E[log2(1 + SNR)] with tail mass below `tail_tol`
// (<= 1e-6). `resolution` is the quadrature panel count (>= 100).
//
// # Safety
// `handle` must be a live handle and `out` a valid pointer.
ZfHgmStatus zf_hgm_capacity(const struct ZfHgmModel *handle,
                            uint32_t resolution,
                            double tail_tol,
                            struct ZfHgmCapacity *out);

// Closed-form Rayleigh-limit capacity for a scenario with zero
// noncentrality; errors with `ZF_HGM_STATUS_DOMAIN` otherwise.
//
// # Safety
// `handle` must be a live handle and `out` a valid pointer.
ZfHgmStatus zf_hgm_rayleigh_capacity(const struct ZfHgmModel *handle, double *out);

// Runs the Monte Carlo reference simulation and summarizes it. `threshold`
// (linear SNR, > 0) selects the outage level reported in the summary.
// Identical inputs produce identical summaries on every platform.
//
// # Safety
// `handle` must be a live handle and `out` a valid pointer.
ZfHgmStatus zf_hgm_simulate(const struct ZfHgmModel *handle,
                            uint64_t n_samples,
                            uint64_t seed,
                            double threshold,
                            struct ZfHgmSimSummary *out);

// Confluent hypergeometric function 1F1(n; nr; sigma) for integer
// parameters 0 < n <= nr, evaluated by series or ODE continuation,
// whichever the argument calls for.
//
// # Safety
// `out` must be a valid pointer.
ZfHgmStatus zf_hgm_hyp1f1(uint32_t n, uint32_t nr, double sigma, double *out);

// Library version as a static NUL-terminated string.
const char *zf_hgm_version(void);

// Copies the current thread's last error message into `buf` (truncated to
// `cap - 1` bytes, always NUL-terminated when `cap > 0`) and returns the
// full message length in bytes, 0 when the last call on this thread
// succeeded.
//
// # Safety
// `buf` must point to `cap` writable bytes, or be null with `cap == 0` to
// query the length.
size_t zf_hgm_last_error(char *buf, size_t cap);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ZF_HGM_H */
