#ifndef SIMLAB_H
#define SIMLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes of every fallible call.
 */
typedef enum SimlabStatus {
  SimlabStatus_Ok = 0,
  /**
   * A tolerance or acceptance gate failed.
   */
  SimlabStatus_CriterionFailed = 1,
  /**
   * Invalid input, configuration or model.
   */
  SimlabStatus_InvalidInput = 2,
  /**
   * Problem size exceeded an exact-solver budget.
   */
  SimlabStatus_ResourceLimit = 3,
  /**
   * Numerical failure (positivity loss, schedule drift).
   */
  SimlabStatus_NumericalFailure = 4,
  /**
   * The sector has a single state; no spectral gap exists.
   */
  SimlabStatus_Degenerate = 5,
} SimlabStatus;

/**
 * Owner of a validated model and its derived transport structure.
 */
typedef struct SimlabModel SimlabModel;

/**
 * Crate version as a static string; never freed.
 */
const char *simlab_version(void);

/**
 * Message of the most recent failure on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *simlab_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `ptr` must come from this library and must not be used afterwards.
 */
void simlab_string_free(char *ptr);

/**
 * Build a model from its JSON description
 * `{"rate": {"window": [...], "table": [...]}, "asymmetry": a, "scale": n,
 *   "density": rho, "ring_size": N, "horizon": T}`.
 * Returns NULL on error (see `simlab_last_error`).
 *
 * # Safety
 * `spec_json` must be a valid NUL-terminated string.
 */
struct SimlabModel *simlab_model_new(const char *spec_json);

/**
 * Release a model handle.
 *
 * # Safety
 * `model` must come from `simlab_model_new` and must not be reused.
 */
void simlab_model_free(struct SimlabModel *model);

/**
 * Structural condition report as a JSON string (caller frees).
 *
 * # Safety
 * `model` must be a live handle from `simlab_model_new`.
 */
char *simlab_model_verify(const struct SimlabModel *model);

/**
 * Exact canonical expectation of a local function (JSON) on the box
 * `{1..l}` with `k` particles.
 *
 * # Safety
 * `f_json` must be a valid NUL-terminated string; `out` non-null.
 */
enum SimlabStatus simlab_canonical_expectation(const char *f_json,
                                               int64_t ell,
                                               int64_t k,
                                               double *out);

/**
 * Max-over-k second-order equivalence-of-ensembles residual; `sign > 0`
 * uses the additive correction, `sign < 0` the subtractive one.
 *
 * # Safety
 * `f_json` must be a valid NUL-terminated string; `out` non-null.
 */
enum SimlabStatus simlab_eoe_residual(const char *f_json, int64_t ell, int sign, double *out);

/**
 * Smallest nonzero eigenvalue of `-S` on the `(l, k)` sector.
 *
 * # Safety
 * `rate_json` must be a valid NUL-terminated string; `out` non-null.
 */
enum SimlabStatus simlab_spectral_gap(uintptr_t ell,
                                      uintptr_t k,
                                      const char *rate_json,
                                      double *out);

/**
 * Simulate one replica and return the density-field series `Y_t(u)`
 * sampled at `times` as JSON-lines (caller frees).
 *
 * # Safety
 * `model` must be live; `times` must point at `n_times` doubles;
 * `test_function` a valid NUL-terminated name like `"hermite:0"`.
 */
char *simlab_run_density_series(const struct SimlabModel *model,
                                uint64_t master_seed,
                                uint64_t replica,
                                const double *times,
                                uintptr_t n_times,
                                const char *test_function);

/**
 * Run a full experiment from a configuration JSON, writing artifacts under
 * `out_dir`. Mirrors the CLI exit-code contract.
 *
 * # Safety
 * Both pointers must be valid NUL-terminated strings.
 */
enum SimlabStatus simlab_experiment_run(const char *config_json, const char *out_dir);

#endif  /* SIMLAB_H */
