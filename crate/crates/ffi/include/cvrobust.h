#ifndef CVROBUST_H
#define CVROBUST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call; zero is success.
 */
typedef enum CvrStatus {
  CVR_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8, unknown state label or out-of-range option.
   */
  CVR_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Truncation too small for the requested tail cap.
   */
  CVR_STATUS_DIMENSION_TOO_SMALL = 2,
  /**
   * Matrix is not a valid density operator or positive observable.
   */
  CVR_STATUS_INVALID_MATRIX = 3,
  /**
   * The requested free set does not apply to the state.
   */
  CVR_STATUS_UNSUPPORTED = 4,
  /**
   * The solver could not certify a result.
   */
  CVR_STATUS_SOLVER_FAILURE = 5,
  /**
   * Caller buffer too small; nothing was written.
   */
  CVR_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  CVR_STATUS_INTERNAL = 7,
} CvrStatus;

/**
 * Free set against which robustness is measured.
 */
typedef enum CvrFreeSet {
  CVR_FREE_SET_CLASSICAL = 0,
  CVR_FREE_SET_INCOHERENT = 1,
  CVR_FREE_SET_SEPARABLE = 2,
} CvrFreeSet;

/**
 * Opaque result of [`cvr_sandwich`].
 */
typedef struct CvrReport CvrReport;

/**
 * Opaque truncated state.
 */
typedef struct CvrState CvrState;

/**
 * Solver and grid settings; start from [`cvr_options_default`].
 */
typedef struct CvrOptions {
  double gap_tol;
  double cut_tol;
  size_t max_cuts;
  size_t max_refinements;
  size_t product_points;
  uint64_t seed;
  /**
   * Coherent grid for the classical set.
   */
  double grid_radius;
  double grid_step;
  size_t grid_angles;
} CvrOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Defaults matching the command-line tool.
 */
struct CvrOptions cvr_options_default(void);

/**
 * Copies the calling thread's last error message, NUL-terminated, into
 * `buf`. Returns the message length without the terminator; when it is not
 * smaller than `len` the message was truncated.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t cvr_last_error(char *buf, size_t len);

/**
 * Builds a named state, e.g. `"fock:3"`, `"cat+:1"`, `"tmsv:lambda=0.5"`,
 * truncated to `dim` levels per mode. `tail_cap` bounds the discarded
 * probability; pass 0 for the default.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CvrStatus cvr_state_new(const char *spec, size_t dim, double tail_cap, struct CvrState **out);

/**
 * Single-mode state from a `dim × dim` density matrix. `im` may be null for
 * a real matrix.
 *
 * # Safety
 * `re` (and `im` when non-null) must hold `dim * dim` values; `out` must be valid.
 */
enum CvrStatus cvr_state_from_matrix(size_t dim,
                                     const double *re,
                                     const double *im,
                                     struct CvrState **out);

/**
 * # Safety
 * `state` must come from this library and not be used afterwards.
 */
void cvr_state_free(struct CvrState *state);

/**
 * Total Hilbert-space dimension (product over modes), 0 for null.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t cvr_state_dim(const struct CvrState *state);

/**
 * Probability discarded by the truncation, NaN for null.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
double cvr_state_tail_weight(const struct CvrState *state);

/**
 * Exact robustness of a named family when a closed form is known.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CvrStatus cvr_closed_form(const char *spec, enum CvrFreeSet free, double *out);

/**
 * Certified bracket on the robustness of `state`. `options` may be null
 * for the defaults.
 *
 * # Safety
 * `state` must be a live handle, `options` null or valid, `out` valid.
 */
enum CvrStatus cvr_sandwich(const struct CvrState *state,
                            enum CvrFreeSet free,
                            const struct CvrOptions *options,
                            struct CvrReport **out);

/**
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void cvr_report_free(struct CvrReport *report);

/**
 * Lower and upper robustness bounds of a report.
 *
 * # Safety
 * `report` must be a live handle; `lower` and `upper` valid pointers.
 */
enum CvrStatus cvr_report_bounds(const struct CvrReport *report, double *lower, double *upper);

/**
 * Whether the report's lower bound rests on an exact free value.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
bool cvr_report_certified(const struct CvrReport *report);

/**
 * Copies the rescaled witness (row-major, `dim * dim` entries each) into
 * `re` and `im`, where `dim` is [`cvr_state_dim`] of the solved state.
 *
 * # Safety
 * `report` must be a live handle; `re` and `im` must hold `len` values.
 */
enum CvrStatus cvr_report_witness(const struct CvrReport *report,
                                  double *re,
                                  double *im,
                                  size_t len);

/**
 * Largest expectation of the `dim × dim` observable over the free set.
 * Only single-mode free sets are accepted here.
 *
 * # Safety
 * `re` (and `im` when non-null) must hold `dim * dim` values; `options`
 * null or valid; `out` valid.
 */
enum CvrStatus cvr_free_value(size_t dim,
                              const double *re,
                              const double *im,
                              enum CvrFreeSet free,
                              const struct CvrOptions *options,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVROBUST_H */
