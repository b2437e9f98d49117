#ifndef MASOUND_H
#define MASOUND_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MasStatus {
  MAS_STATUS_OK = 0,
  MAS_STATUS_NULL_POINTER = 1,
  MAS_STATUS_INVALID_INPUT = 2,
  MAS_STATUS_NO_SIGNAL = 3,
  MAS_STATUS_CHECK_FAILED = 4,
  MAS_STATUS_IO = 5,
  MAS_STATUS_INDEX_OUT_OF_RANGE = 6,
  MAS_STATUS_PANIC = 7,
} MasStatus;

typedef enum MasStopReason {
  MAS_STOP_REASON_DYNAMIC_RANGE = 0,
  MAS_STOP_REASON_MAX_ITERATIONS = 1,
} MasStopReason;

/**
 * Sub-array CFRs of a multiplicative array.
 */
typedef struct MasMaCfr MasMaCfr;

/**
 * Result of [`mas_run_sic`].
 */
typedef struct MasReport MasReport;

/**
 * Multiplicative array and frequency sweep for [`mas_simulate_ma`].
 */
typedef struct MasMaSetup {
  size_t x_count;
  size_t y_count;
  double spacing_wl;
  double f_start_hz;
  double f_stop_hz;
  size_t n_points;
} MasMaSetup;

/**
 * One propagation path; power in dB, angles in degrees, delay in ns.
 */
typedef struct MasPath {
  double power_db;
  double phase_deg;
  double theta_deg;
  double phi_deg;
  double delay_ns;
} MasPath;

/**
 * Estimator settings. Fill with [`mas_estimator_defaults`] first.
 */
typedef struct MasEstimatorOptions {
  double epsilon_db;
  size_t max_iterations;
  size_t pad_factor;
  double theta_start_deg;
  double theta_stop_deg;
  double theta_step_deg;
  double phi_start_deg;
  double phi_stop_deg;
  double phi_step_deg;
} MasEstimatorOptions;

typedef struct MasEstimatedPath {
  double power_db;
  double phase_deg;
  double theta_deg;
  double phi_deg;
  double delay_ns;
  size_t iteration;
} MasEstimatedPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next call on the same thread.
 */
const char *mas_last_error_message(void);

const char *mas_version(void);

/**
 * Direction cosines of an elevation/azimuth pair in degrees.
 *
 * # Safety
 * `u` and `v` must be valid for writes.
 */
enum MasStatus mas_uv_map(double theta_deg, double phi_deg, double *u, double *v);

/**
 * Dolph-Chebyshev weights, peak-normalized, written to `out[0..n]`.
 *
 * # Safety
 * `out` must be valid for `n` writes.
 */
enum MasStatus mas_chebyshev_taper(size_t n, double sidelobe_db, double *out);

/**
 * Noiseless sub-array CFRs of `paths` (may be null when `n_paths` is 0).
 *
 * # Safety
 * `setup` and `out` must be valid; `paths` must hold `n_paths` entries.
 */
enum MasStatus mas_simulate_ma(const struct MasMaSetup *setup,
                               const struct MasPath *paths,
                               size_t n_paths,
                               struct MasMaCfr **out);

/**
 * Reads `cfr_ma_x.csv` and `cfr_ma_y.csv` from `dir`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` valid for writes.
 */
enum MasStatus mas_ma_cfr_read(const char *dir, struct MasMaCfr **out);

/**
 * Writes both sub-array files into the existing directory `dir`.
 *
 * # Safety
 * `cfr` must come from this library; `dir` must be NUL-terminated.
 */
enum MasStatus mas_ma_cfr_write(const struct MasMaCfr *cfr, const char *dir);

/**
 * Element counts and frequency points of a handle.
 *
 * # Safety
 * All pointers must be valid.
 */
enum MasStatus mas_ma_cfr_dims(const struct MasMaCfr *cfr,
                               size_t *x_count,
                               size_t *y_count,
                               size_t *n_freq);

/**
 * # Safety
 * `cfr` must come from this library and not be used afterwards.
 */
void mas_ma_cfr_free(struct MasMaCfr *cfr);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum MasStatus mas_estimator_defaults(struct MasEstimatorOptions *out);

/**
 * Runs successive interference cancellation on a handle.
 *
 * # Safety
 * `cfr` and `options` must be valid; `out` valid for writes.
 */
enum MasStatus mas_run_sic(const struct MasMaCfr *cfr,
                           const struct MasEstimatorOptions *options,
                           struct MasReport **out);

/**
 * Number of estimated paths; 0 for a null handle.
 *
 * # Safety
 * `report` must come from this library or be null.
 */
size_t mas_report_len(const struct MasReport *report);

/**
 * # Safety
 * `report` must come from this library; `out` valid for writes.
 */
enum MasStatus mas_report_path(const struct MasReport *report,
                               size_t index,
                               struct MasEstimatedPath *out);

/**
 * # Safety
 * `report` and `out` must be valid.
 */
enum MasStatus mas_report_stop_reason(const struct MasReport *report, enum MasStopReason *out);

/**
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void mas_report_free(struct MasReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MASOUND_H */
