#ifndef GLMMHD_H
#define GLMMHD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of doubles per cell in state buffers.
 */
#define GLM_NVAR 9

typedef enum GlmStatus {
  GLM_STATUS_OK = 0,
  GLM_STATUS_NULL_POINTER = 1,
  GLM_STATUS_INVALID_ARGUMENT = 2,
  GLM_STATUS_CONFIG = 3,
  /**
   * Inadmissible state or bad numerical parameter.
   */
  GLM_STATUS_NUMERICAL = 4,
  GLM_STATUS_SOLVER_FAILURE = 5,
  /**
   * The simulation already reached its end time.
   */
  GLM_STATUS_FINISHED = 6,
  GLM_STATUS_BUFFER_TOO_SMALL = 7,
  GLM_STATUS_IO = 8,
  GLM_STATUS_PANIC = 9,
} GlmStatus;

/**
 * Opaque simulation handle.
 */
typedef struct GlmSimulation GlmSimulation;

/**
 * Per-step diagnostics.
 */
typedef struct GlmDiagnostics {
  double t;
  double dt;
  double ch;
  double bdiv_max;
  double energy;
  double helicity_rate;
  uint64_t leaf_count;
  uint64_t virtual_count;
  double dc_running;
} GlmDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL terminated,
 * truncated to `cap`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t glm_last_error(char *buf, size_t cap);

/**
 * Create a simulation from `key = value` configuration text (the keys of
 * the command line). Null or empty text selects the defaults.
 *
 * # Safety
 * `config` must be null or a NUL-terminated string; `out` must be valid.
 */
enum GlmStatus glm_simulation_new(const char *config, struct GlmSimulation **out);

/**
 * Release a simulation. Null is ignored.
 *
 * # Safety
 * `sim` must come from [`glm_simulation_new`] and not be used afterwards.
 */
void glm_simulation_free(struct GlmSimulation *sim);

/**
 * Advance one time step; `out` (optional) receives its diagnostics.
 *
 * # Safety
 * `sim` must be a live handle; `out` null or valid.
 */
enum GlmStatus glm_simulation_step(struct GlmSimulation *sim, struct GlmDiagnostics *out);

/**
 * Advance until `t` or the configured end time, whichever comes first.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum GlmStatus glm_simulation_run_until(struct GlmSimulation *sim, double t);

/**
 * Diagnostics of the current state.
 *
 * # Safety
 * `sim` must be a live handle; `out` valid.
 */
enum GlmStatus glm_simulation_diagnostics(const struct GlmSimulation *sim,
                                          struct GlmDiagnostics *out);

/**
 * Current time, or NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double glm_simulation_time(const struct GlmSimulation *sim);

/**
 * Cells currently advanced in time (0 for a null handle).
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
uint64_t glm_simulation_leaf_count(const struct GlmSimulation *sim);

/**
 * 1 when the end time is reached, 0 otherwise (and for null).
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
int32_t glm_simulation_finished(const struct GlmSimulation *sim);

/**
 * Time-averaged compression in percent.
 *
 * # Safety
 * `sim` must be a live handle; `out` valid.
 */
enum GlmStatus glm_simulation_compression(const struct GlmSimulation *sim, double *out);

/**
 * Size of the finest uniform grid.
 *
 * # Safety
 * `sim` must be a live handle; `nx`, `ny` valid.
 */
enum GlmStatus glm_simulation_grid_size(const struct GlmSimulation *sim,
                                        uint64_t *nx,
                                        uint64_t *ny);

/**
 * Copy the solution on the finest uniform grid into `buf`: `nx * ny` cells,
 * row-major, `GLM_NVAR` doubles each in the order
 * (rho, E, rho ux, rho uy, rho uz, Bx, By, Bz, psi).
 *
 * # Safety
 * `sim` must be a live handle; `buf` must hold `len` doubles.
 */
enum GlmStatus glm_simulation_copy_field(const struct GlmSimulation *sim, double *buf, size_t len);

/**
 * GLM-HLLD x-direction interface flux between two conserved states.
 *
 * # Safety
 * `ql`, `qr` and `out` must each point to `GLM_NVAR` doubles.
 */
enum GlmStatus glm_hlld_flux_x(const double *ql,
                               const double *qr,
                               double gamma,
                               double ch,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLMMHD_H */
