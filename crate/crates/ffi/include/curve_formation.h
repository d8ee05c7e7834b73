#ifndef CURVE_FORMATION_H
#define CURVE_FORMATION_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_ARGUMENT = 2,
  CF_STATUS_CONFIG = 3,
  CF_STATUS_IO = 4,
  CF_STATUS_PARSE = 5,
  /**
   * The run stopped on an estimator contradiction; the partial log is
   * still returned.
   */
  CF_STATUS_CONTRADICTION = 6,
  CF_STATUS_OUT_OF_RANGE = 7,
  CF_STATUS_INTERNAL = 8,
} CfStatus;

/**
 * Complete run configuration.
 */
typedef struct CfConfig CfConfig;

/**
 * Closed polyline with its distance envelope.
 */
typedef struct CfCurve CfCurve;

/**
 * Trajectory of a finished (or aborted) run.
 */
typedef struct CfLog CfLog;

/**
 * Parameters of [`cf_config_new`].
 */
typedef struct CfSimParams {
  size_t agents;
  size_t pacemaker;
  double speed;
  double d;
  double k_gain;
  double r_sure;
  double r_max;
  double q_bar;
  double phi;
  uint64_t horizon;
  uint64_t seed;
  /**
   * Minimum cyclic gap of the generated initial positions.
   */
  double min_gap;
} CfSimParams;

/**
 * Run metrics. `k5` is meaningful only when `settled` is non-zero.
 */
typedef struct CfMetrics {
  double eps_hat;
  double eps_over_b;
  uint64_t k5;
  uint8_t settled;
} CfMetrics;

/**
 * Ground-truth audit counters summed over a run.
 */
typedef struct CfAudit {
  uint64_t tracked;
  uint64_t estimate_misses;
  uint64_t input_misses;
  uint64_t wrong_followers;
  uint64_t order_violations;
} CfAudit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL,
 * so a caller can size a buffer with a first call using `len = 0`.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null when `len` is 0.
 */
size_t cf_last_error_message(char *buf, size_t len);

/**
 * Unit square, perimeter 4.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CfStatus cf_curve_unit_square(struct CfCurve **out);

/**
 * Closed polyline through `n` vertices given as `x0, y0, x1, y1, …`.
 *
 * # Safety
 * `xy` must hold `2·n` doubles; `out` must be a valid pointer.
 */
enum CfStatus cf_curve_from_vertices(const double *xy, size_t n, struct CfCurve **out);

/**
 * Loads a vertex file (one `x y` pair per line).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum CfStatus cf_curve_load(const char *path, struct CfCurve **out);

/**
 * # Safety
 * `curve` and `out` must be valid pointers.
 */
enum CfStatus cf_curve_length(const struct CfCurve *curve, double *out);

/**
 * Euclidean distance between the points at arclengths `s1` and `s2`.
 *
 * # Safety
 * `curve` and `out` must be valid pointers.
 */
enum CfStatus cf_curve_distance(const struct CfCurve *curve, double s1, double s2, double *out);

/**
 * # Safety
 * `curve` must come from a `cf_curve_*` constructor or be null.
 */
void cf_curve_free(struct CfCurve *curve);

/**
 * Reference setup: six agents on the unit square, `d = 0.003`, `T = 5000`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CfStatus cf_config_reference(double k_gain, double phi, uint64_t seed, struct CfConfig **out);

/**
 * Configuration on `curve` with generated initial positions.
 *
 * # Safety
 * `curve`, `params` and `out` must be valid pointers.
 */
enum CfStatus cf_config_new(const struct CfCurve *curve,
                            const struct CfSimParams *params,
                            struct CfConfig **out);

/**
 * Reads a TOML run configuration.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum CfStatus cf_config_load(const char *path, struct CfConfig **out);

/**
 * # Safety
 * `config` must be a valid pointer.
 */
enum CfStatus cf_config_set_seed(struct CfConfig *config, uint64_t seed);

/**
 * # Safety
 * `config` must be a valid pointer.
 */
enum CfStatus cf_config_set_horizon(struct CfConfig *config, uint64_t horizon);

/**
 * # Safety
 * `config` must come from a `cf_config_*` constructor or be null.
 */
void cf_config_free(struct CfConfig *config);

/**
 * Runs `config` to its horizon. On [`CfStatus::Contradiction`] `*out` still
 * receives the log up to the failing step; on other errors it is set to null.
 *
 * # Safety
 * `config` and `out` must be valid pointers.
 */
enum CfStatus cf_run(const struct CfConfig *config, struct CfLog **out);

/**
 * Number of logged steps (`T + 1` for a complete run).
 *
 * # Safety
 * `log` and `out` must be valid pointers.
 */
enum CfStatus cf_log_steps(const struct CfLog *log, size_t *out);

/**
 * Number of agents, which is also the number of cyclic spacings per step.
 *
 * # Safety
 * `log` and `out` must be valid pointers.
 */
enum CfStatus cf_log_agents(const struct CfLog *log, size_t *out);

/**
 * Copies the cyclic spacings `x_{1,0}, x_{2,1}, …, x_{0,N−1}` of `step` into
 * `out`, which must hold at least `N` doubles.
 *
 * # Safety
 * `log` must be valid and `out` valid for `len` doubles.
 */
enum CfStatus cf_log_spacings(const struct CfLog *log, size_t step, double *out, size_t len);

/**
 * Formation error over the last `window` steps and settling time.
 *
 * # Safety
 * `log` and `out` must be valid pointers.
 */
enum CfStatus cf_log_metrics(const struct CfLog *log, size_t window, struct CfMetrics *out);

/**
 * Settling instant of cyclic pair `pair`, or `u64::MAX` if it does not settle.
 *
 * # Safety
 * `log` and `out` must be valid pointers.
 */
enum CfStatus cf_log_pair_settling(const struct CfLog *log, size_t pair, uint64_t *out);

/**
 * # Safety
 * `log` and `out` must be valid pointers.
 */
enum CfStatus cf_log_audit(const struct CfLog *log, struct CfAudit *out);

/**
 * Writes the trajectory CSV.
 *
 * # Safety
 * `log` must be valid; `path` must be a NUL-terminated string.
 */
enum CfStatus cf_log_write_csv(const struct CfLog *log, const char *path);

/**
 * # Safety
 * `log` must come from [`cf_run`] or be null.
 */
void cf_log_free(struct CfLog *log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURVE_FORMATION_H */
