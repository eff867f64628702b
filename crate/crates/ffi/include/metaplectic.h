#ifndef METAPLECTIC_H
#define METAPLECTIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2, 3 and 5 agree with the exit codes of the
 * command-line tool.
 */
typedef enum mp_status {
  MP_STATUS_OK = 0,
  MP_STATUS_INVALID_INPUT = 2,
  MP_STATUS_RANK_AMBIGUOUS = 3,
  MP_STATUS_NUMERICAL = 5,
  MP_STATUS_NULL_POINTER = 10,
  MP_STATUS_BUFFER_TOO_SMALL = 11,
  /**
   * The requested quantity does not exist for this analysis.
   */
  MP_STATUS_NOT_AVAILABLE = 12,
  MP_STATUS_PANIC = 13,
} mp_status;

/**
 * Result of one analysis.
 */
typedef struct mp_analysis mp_analysis;

/**
 * Numerical tolerances; start from [`mp_tolerances_default`].
 */
typedef struct mp_tolerances {
  double symplectic;
  double rank;
  double rank_gap_ratio;
  double null;
  double psd;
  double identity;
  double condition_cap;
} mp_tolerances;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default tolerances.
 */
struct mp_tolerances mp_tolerances_default(void);

/**
 * Analyze the `2d × 2d` symplectic matrix stored row-major at `data`.
 * `tol` may be null for defaults. On success `*out` receives a handle.
 *
 * # Safety
 * `data` must point to `4d²` readable doubles; `tol` must be null or valid;
 * `out` must be writable.
 */
enum mp_status mp_analyze_matrix(const double *data,
                                 size_t d,
                                 const struct mp_tolerances *tol,
                                 struct mp_analysis **out);

/**
 * Analyze the product of a generator word given as JSON (the format read by
 * the command-line tool). `default_dim` applies when the word does not fix
 * its dimension.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `tol` null or valid; `out`
 * writable.
 */
enum mp_status mp_analyze_word_json(const char *json,
                                    size_t default_dim,
                                    const struct mp_tolerances *tol,
                                    struct mp_analysis **out);

/**
 * Release a handle; null is ignored.
 *
 * # Safety
 * `a` must be null or a handle not yet freed.
 */
void mp_analysis_free(struct mp_analysis *a);

/**
 * Half the matrix size; 0 for a null handle.
 *
 * # Safety
 * `a` must be null or a live handle.
 */
size_t mp_analysis_dim(const struct mp_analysis *a);

/**
 * # Safety
 * `a` must be a live handle and `out` writable.
 */
enum mp_status mp_analysis_is_quasi_diagonal(const struct mp_analysis *a, bool *out);

/**
 * Dimension of the localization manifold.
 *
 * # Safety
 * `a` must be a live handle and `out` writable.
 */
enum mp_status mp_analysis_gamma_dim(const struct mp_analysis *a, size_t *out);

/**
 * Copy the `2d × 2d` smoothed form, row-major, into `buf` (`len ≥ 4d²`).
 *
 * # Safety
 * `a` must be a live handle and `buf` must have room for `len` doubles.
 */
enum mp_status mp_analysis_qs(const struct mp_analysis *a, double *buf, size_t len);

/**
 * Decay constant `ε`; `NotAvailable` unless the kernel is quasi-diagonal.
 *
 * # Safety
 * `a` must be a live handle and `out` writable.
 */
enum mp_status mp_analysis_epsilon(const struct mp_analysis *a, double *out);

/**
 * Analytic amplitude `c`; `NotAvailable` when it has to be fitted.
 *
 * # Safety
 * `a` must be a live handle and `out` writable.
 */
enum mp_status mp_analysis_amplitude(const struct mp_analysis *a, double *out);

/**
 * Full report as JSON; null on failure. Free with [`mp_string_free`].
 *
 * # Safety
 * `a` must be null or a live handle.
 */
char *mp_analysis_to_json(const struct mp_analysis *a);

/**
 * Copy of the calling thread's last error message, or null if there is
 * none. Free with [`mp_string_free`].
 */
char *mp_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void mp_string_free(char *s);

/**
 * Library version, statically allocated.
 */
const char *mp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METAPLECTIC_H */
