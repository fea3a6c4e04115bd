/* C ABI for the qslimit library. Generated by cbindgen; do not edit. */

#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum QsStatus {
  // Success.
  QS_STATUS_OK = 0,
  // A required pointer argument was null.
  QS_STATUS_NULL_ARGUMENT = 1,
  // An argument was outside the documented domain.
  QS_STATUS_INVALID_ARGUMENT = 2,
  // The fixed-point iteration did not converge.
  QS_STATUS_NO_CONVERGENCE = 3,
  // Evaluation point outside the represented domain.
  QS_STATUS_OUT_OF_DOMAIN = 4,
  // A numerical routine failed; see qs_last_error.
  QS_STATUS_NUMERICS_FAILURE = 5,
  // Invalid UTF-8 or malformed text input.
  QS_STATUS_BAD_INPUT = 6,
  // Unexpected internal failure (caught panic).
  QS_STATUS_INTERNAL = 7,
} QsStatus;

// Opaque handle: a converged characteristic-function grid.
typedef struct QsCharFn QsCharFn;

// Opaque handle: a density on a uniform x grid.
typedef struct QsDensityGrid QsDensityGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message for this thread into `buf` (NUL-terminated,
// truncated to `len` bytes). Returns the full message length in bytes,
// excluding the NUL.
//
// # Safety
// `buf` must point to `len` writable bytes (or be null, in which case only
// the length is returned).
uintptr_t qs_last_error(char *buf, uintptr_t len);

// Run the fixed-point iteration for the characteristic function and return
// a new handle through `out`. The handle carries a decay fit and equation
// residual, so transform evaluations get tight tail budgets.
//
// # Safety
// `out` must be a valid pointer; the returned handle must be released with
// [`qs_charfn_free`].
enum QsStatus qs_charfn_iterate(double t_max,
                                double h,
                                uintptr_t max_iter,
                                double tol,
                                struct QsCharFn **out);

// Parse a handle from CSV text in the `t,re_f,im_f` format written by
// `qs_charfn_to_csv` / the CLI.
//
// # Safety
// `text` must be a NUL-terminated string; `out` a valid pointer.
enum QsStatus qs_charfn_from_csv(const char *text, struct QsCharFn **out);

// Release a characteristic-function handle. Null is a no-op.
//
// # Safety
// `f` must come from this library and not be used afterwards.
void qs_charfn_free(struct QsCharFn *f);

// Evaluate f(t) (Hermitian-extended to t < 0); |t| must not exceed the grid.
//
// # Safety
// All pointers must be valid.
enum QsStatus qs_charfn_eval(const struct QsCharFn *f, double t, double *out_re, double *out_im);

// Grid extent of a handle.
//
// # Safety
// `f` must be a valid handle.
double qs_charfn_t_max(const struct QsCharFn *f);

// Evaluate the Laplace-transform derivative ψ⁽ᵒʳᵈᵉʳ⁾(s) at
// s = re_s + i·im_s (requires re_s ≥ 0.05, order ≤ 6). `out_err` receives
// the modeled error budget and may be null.
//
// # Safety
// `f`, `out_re`, `out_im` must be valid pointers.
enum QsStatus qs_psi(const struct QsCharFn *f,
                     double re_s,
                     double im_s,
                     uint32_t order,
                     double *out_re,
                     double *out_im,
                     double *out_err);

// Invert the density on [x0, x1] with the given step; requires the handle
// to carry a decay fit (handles from `qs_charfn_iterate` do).
//
// # Safety
// `f` and `out` must be valid pointers; release the result with
// [`qs_density_free`].
enum QsStatus qs_density_invert(const struct QsCharFn *f,
                                double x0,
                                double x1,
                                double step,
                                struct QsDensityGrid **out);

// Number of grid points in a density handle (0 for null).
//
// # Safety
// `dg` must be a valid handle or null.
uintptr_t qs_density_len(const struct QsDensityGrid *dg);

// Read grid point `idx`: abscissa, density value, and combined error bound.
// Output pointers may individually be null.
//
// # Safety
// `dg` must be a valid handle; non-null outputs must be writable.
enum QsStatus qs_density_point(const struct QsDensityGrid *dg,
                               uintptr_t idx,
                               double *out_x,
                               double *out_p,
                               double *out_err);

// Release a density handle. Null is a no-op.
//
// # Safety
// `dg` must come from this library and not be used afterwards.
void qs_density_free(struct QsDensityGrid *dg);

// Simulate quicksort costs (exact comparison counts, normalized by n) and
// return the empirical mean and variance of the normalized cost.
// Requires n ≥ 2 and samples ≥ 1000; fully deterministic in `seed`.
//
// # Safety
// Non-null outputs must be writable.
enum QsStatus qs_simulate_moments(uintptr_t n,
                                  uintptr_t samples,
                                  uint64_t seed,
                                  double *out_mean,
                                  double *out_variance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
