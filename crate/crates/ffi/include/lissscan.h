#ifndef LISSSCAN_H
#define LISSSCAN_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_ARGUMENT = 2,
  LS_STATUS_NO_FEASIBLE_DESIGN = 3,
  LS_STATUS_DEGENERATE_PATTERN = 4,
  LS_STATUS_INVALID_PARAMS = 5,
  LS_STATUS_OPTIMIZATION_FAILED = 6,
  LS_STATUS_UNDEFINED_PHASE = 7,
  LS_STATUS_ILL_CONDITIONED = 8,
  LS_STATUS_NON_SQUARE = 9,
  LS_STATUS_INGEST = 10,
  LS_STATUS_IO = 11,
  LS_STATUS_PANIC = 12,
} LsStatus;

typedef enum LsRule {
  LS_RULE_PROPOSED = 0,
  LS_RULE_BASELINE = 1,
} LsRule;

typedef enum LsCase {
  LS_CASE_CASE1 = 1,
  LS_CASE_CASE2 = 2,
  LS_CASE_CASE3 = 3,
  LS_CASE_BASELINE = 4,
} LsCase;

typedef enum LsConstraint {
  LS_CONSTRAINT_RMS = 0,
  LS_CONSTRAINT_ABSOLUTE = 1,
} LsConstraint;

typedef enum LsStepRule {
  LS_STEP_RULE_EXACT = 0,
  LS_STEP_RULE_FIXED = 1,
} LsStepRule;

typedef struct LsDesign LsDesign;

typedef struct LsOptimizeResult LsOptimizeResult;

typedef struct LsParams LsParams;

typedef struct LsPattern LsPattern;

typedef struct LsWeightMap LsWeightMap;

typedef struct LsDesignInfo {
  int64_t fx_num;
  int64_t fx_den;
  double phix;
  double phiy;
  enum LsCase design_case;
  int64_t k;
  uint32_t m;
  bool near_integer_ratio;
} LsDesignInfo;

/**
 * Resonances and quality factors. Normalized configs use `fy_res = 1`.
 */
typedef struct LsScannerConfig {
  double fx_res;
  double fy_res;
  double qx;
  double qy;
} LsScannerConfig;

typedef struct LsRect {
  double x0;
  double x1;
  double y0;
  double y1;
} LsRect;

/**
 * Optimizer settings. A `threshold` of zero or less selects the default
 * occupancy radius.
 */
typedef struct LsOptimizeOptions {
  size_t max_iters;
  double step;
  enum LsStepRule step_rule;
  uint32_t max_halvings;
  double threshold;
  size_t n_samples;
  double rel_tol;
  size_t stall_window;
} LsOptimizeOptions;

/**
 * Recovered amplitudes and phases of a three-tone quadrature signal.
 */
typedef struct LsMultitone {
  double amps[3];
  double phases[3];
} LsMultitone;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Every call
 * returning an [`LsStatus`] replaces it.
 */
const char *ls_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ls_version(void);

/**
 * Unmodulated design for frequency ratio `r` and frame length `m`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum LsStatus ls_design_new(double r, uint32_t m, enum LsRule rule, struct LsDesign **out);

/**
 * # Safety
 * `design` must come from [`ls_design_new`]; `out` must be writable.
 */
enum LsStatus ls_design_info(const struct LsDesign *design, struct LsDesignInfo *out);

/**
 * `Hx * Hy` at the design's drive frequencies.
 *
 * # Safety
 * Pointers must be valid; `out` must be writable.
 */
enum LsStatus ls_scanning_range(const struct LsDesign *design,
                                const struct LsScannerConfig *config,
                                double *out);

/**
 * # Safety
 * `design` must come from [`ls_design_new`] or be null.
 */
void ls_design_free(struct LsDesign *design);

/**
 * Samples frame `frame` of a design with `n` points.
 *
 * # Safety
 * Pointers must be valid; `out` must be writable.
 */
enum LsStatus ls_pattern_sample(const struct LsDesign *design,
                                const struct LsScannerConfig *config,
                                uint32_t frame,
                                size_t n,
                                struct LsPattern **out);

/**
 * Pattern from caller-owned samples. `frame_len` is in y-cycles.
 *
 * # Safety
 * `t`, `x` and `y` must each hold `len` doubles; `out` must be writable.
 */
enum LsStatus ls_pattern_new(const double *t,
                             const double *x,
                             const double *y,
                             size_t len,
                             uint32_t frame_len,
                             uint32_t frames,
                             struct LsPattern **out);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `pattern` must be a live handle or null.
 */
size_t ls_pattern_len(const struct LsPattern *pattern);

/**
 * Copies up to `cap` samples into each non-null buffer.
 *
 * # Safety
 * Each non-null buffer must hold `cap` doubles.
 */
enum LsStatus ls_pattern_copy(const struct LsPattern *pattern,
                              double *t,
                              double *x,
                              double *y,
                              size_t cap);

/**
 * Fill-factor on a `grid` x `grid` lattice of patch centers; `r_max` may be null.
 *
 * # Safety
 * `pattern` must be live; `fill` must be writable.
 */
enum LsStatus ls_fill_factor(const struct LsPattern *pattern,
                             size_t grid,
                             double *fill,
                             double *r_max);

/**
 * # Safety
 * `pattern` must be a live handle or null.
 */
void ls_pattern_free(struct LsPattern *pattern);

/**
 * Weight map from `m * m` row-major weights, row 0 at `y = -1`.
 *
 * # Safety
 * `w` must hold `m * m` doubles; `out` must be writable.
 */
enum LsStatus ls_weight_map_new(const double *w, size_t m, struct LsWeightMap **out);

/**
 * Weight map on an `m` x `m` grid covering the given rectangles.
 *
 * # Safety
 * `rects` must hold `n` entries; `out` must be writable.
 */
enum LsStatus ls_weight_map_from_rects(const struct LsRect *rects,
                                       size_t n,
                                       size_t m,
                                       struct LsWeightMap **out);

/**
 * Weight map from a PGM or CSV grid file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LsStatus ls_weight_map_load(const char *path, struct LsWeightMap **out);

/**
 * # Safety
 * `map` must be a live handle or null.
 */
void ls_weight_map_free(struct LsWeightMap *map);

/**
 * Seeded random initial parameters on the unit constraint surface.
 * Tone frequencies are in units of `config.fy_res`.
 *
 * # Safety
 * Frequency arrays must hold `nx` and `ny` doubles; `out` must be writable.
 */
enum LsStatus ls_params_random(const double *x_freqs,
                               size_t nx,
                               const double *y_freqs,
                               size_t ny,
                               uint32_t l,
                               uint32_t m,
                               const struct LsScannerConfig *config,
                               enum LsConstraint constraint,
                               uint64_t seed,
                               struct LsParams **out);

/**
 * Samples `n` points over the parameters' window.
 *
 * # Safety
 * `params` must be live; `out` must be writable.
 */
enum LsStatus ls_params_synthesize(const struct LsParams *params, size_t n, struct LsPattern **out);

/**
 * # Safety
 * `params` must be a live handle or null.
 */
void ls_params_free(struct LsParams *params);

struct LsOptimizeOptions ls_optimize_options_default(void);

/**
 * Projected gradient descent from `init`; `options` may be null for defaults.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum LsStatus ls_optimize(const struct LsParams *init,
                          const struct LsWeightMap *map,
                          const struct LsOptimizeOptions *options,
                          struct LsOptimizeResult **out);

/**
 * Loss of the best iterate, or NaN for a null handle.
 *
 * # Safety
 * `result` must be a live handle or null.
 */
double ls_optimize_result_loss(const struct LsOptimizeResult *result);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
size_t ls_optimize_result_iterations(const struct LsOptimizeResult *result);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
bool ls_optimize_result_converged(const struct LsOptimizeResult *result);

/**
 * Length of the loss trace (initial point included).
 *
 * # Safety
 * `result` must be a live handle or null.
 */
size_t ls_optimize_result_trace_len(const struct LsOptimizeResult *result);

/**
 * Copies up to `cap` trace entries into `buf`.
 *
 * # Safety
 * `buf` must hold `cap` doubles.
 */
enum LsStatus ls_optimize_result_trace(const struct LsOptimizeResult *result,
                                       double *buf,
                                       size_t cap);

/**
 * New handle holding a copy of the best parameters.
 *
 * # Safety
 * `result` must be live; `out` must be writable.
 */
enum LsStatus ls_optimize_result_params(const struct LsOptimizeResult *result,
                                        struct LsParams **out);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
void ls_optimize_result_free(struct LsOptimizeResult *result);

/**
 * Recovers three tone amplitudes and phases from quadrature samples taken
 * at `0`, `T/2` and `T`.
 *
 * # Safety
 * `x`, `xq` and `omegas` must each hold 3 doubles; `out` must be writable.
 */
enum LsStatus ls_solve_multitone(const double *x,
                                 const double *xq,
                                 const double *omegas,
                                 double frame_time,
                                 struct LsMultitone *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LISSSCAN_H */
