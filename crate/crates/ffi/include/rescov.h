#ifndef RESCOV_H
#define RESCOV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum RescovStatus {
  RESCOV_STATUS_OK = 0,
  RESCOV_STATUS_NULL_POINTER = 1,
  RESCOV_STATUS_INVALID_ARGUMENT = 2,
  RESCOV_STATUS_INVALID_UTF8 = 3,
  RESCOV_STATUS_PARSE_ERROR = 4,
  /**
   * The computation ran but reported a failure (e.g. an aborted run or an
   * unreachable base).
   */
  RESCOV_STATUS_FAILED = 5,
  RESCOV_STATUS_IO = 6,
  /**
   * The simulation handle has not been run yet.
   */
  RESCOV_STATUS_NOT_RUN = 7,
  RESCOV_STATUS_PANIC = 8,
} RescovStatus;

/**
 * Opaque framework handle.
 */
typedef struct RescovFramework RescovFramework;

/**
 * Opaque simulation handle: a scenario and, after a run, its results.
 */
typedef struct RescovSimulation RescovSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or NULL. The pointer is
 * owned by the library and stays valid until the next failing call.
 */
const char *rescov_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void rescov_string_free(char *s);

/**
 * Energy level (1 highest to 4 lowest) of a state of charge in `[0, 1]`.
 *
 * # Safety
 * `out_level` must be valid for writes.
 */
enum RescovStatus rescov_energy_level(double soc, uint8_t *out_level);

/**
 * Builds a planar framework from `n` points given as `xy = [x0, y0, x1, ...]`
 * and `m` edges given as `edges = [i0, j0, i1, j1, ...]`.
 *
 * # Safety
 * `xy` must hold `2 * n` doubles, `edges` must hold `2 * m` indices (it may
 * be NULL when `m == 0`) and `out` must be valid for writes.
 */
enum RescovStatus rescov_framework_new(const double *xy,
                                       size_t n,
                                       const size_t *edges,
                                       size_t m,
                                       struct RescovFramework **out);

/**
 * # Safety
 * `fw` must come from [`rescov_framework_new`] or be NULL.
 */
void rescov_framework_free(struct RescovFramework *fw);

/**
 * Infinitesimal bearing rigidity test. Writes the verdict and the numerical
 * rank of the bearing rigidity matrix; either output may be NULL.
 *
 * # Safety
 * `fw` must be a live handle; non-NULL outputs must be valid for writes.
 */
enum RescovStatus rescov_framework_is_ibr(const struct RescovFramework *fw,
                                          double tol,
                                          bool *out_rigid,
                                          size_t *out_rank);

/**
 * Parses and validates a scenario (the same JSON the CLI accepts).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum RescovStatus rescov_simulation_from_json(const char *json, struct RescovSimulation **out);

/**
 * # Safety
 * `sim` must come from [`rescov_simulation_from_json`] or be NULL.
 */
void rescov_simulation_free(struct RescovSimulation *sim);

/**
 * Runs the scenario. Returns `Failed` if the run aborted; the partial
 * results stay available on the handle either way.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum RescovStatus rescov_simulation_run(struct RescovSimulation *sim);

/**
 * Lowest state of charge reached by any robot.
 *
 * # Safety
 * `sim` must be a live handle and `out` valid for writes.
 */
enum RescovStatus rescov_simulation_min_soc(const struct RescovSimulation *sim, double *out);

/**
 * Run summary as a JSON string; free it with [`rescov_string_free`].
 *
 * # Safety
 * `sim` must be a live handle and `out` valid for writes.
 */
enum RescovStatus rescov_simulation_summary_json(const struct RescovSimulation *sim, char **out);

/**
 * Writes trace, events, summary, config and plots into `dir`.
 *
 * # Safety
 * `sim` must be a live handle and `dir` a NUL-terminated path.
 */
enum RescovStatus rescov_simulation_write_outputs(const struct RescovSimulation *sim,
                                                  const char *dir);

/**
 * Minimum-time return plan. Takes the `plan-return` input JSON and writes
 * the plan as JSON; free it with [`rescov_string_free`]. An unreachable
 * base yields `Failed`.
 *
 * # Safety
 * `input_json` must be a NUL-terminated string and `out` valid for writes.
 */
enum RescovStatus rescov_plan_return_json(const char *input_json, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESCOV_H */
