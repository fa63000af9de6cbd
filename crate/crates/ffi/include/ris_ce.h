/* C interface of the ris-ce RIS channel-estimation simulator. */

#ifndef RIS_CE_H
#define RIS_CE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes of every fallible call.
 */
typedef enum RisceStatus {
  RISCE_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  RISCE_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  RISCE_STATUS_INVALID_UTF8 = 2,
  /**
   * Configuration parsing or validation failed.
   */
  RISCE_STATUS_CONFIG_ERROR = 3,
  /**
   * The simulation itself failed.
   */
  RISCE_STATUS_RUN_ERROR = 4,
  /**
   * Reading or writing a file failed.
   */
  RISCE_STATUS_IO_ERROR = 5,
  /**
   * An index was out of range.
   */
  RISCE_STATUS_OUT_OF_RANGE = 6,
} RisceStatus;

/**
 * Opaque scenario configuration handle.
 */
typedef struct RisceConfig RisceConfig;

/**
 * Opaque result-set handle.
 */
typedef struct RisceResults RisceResults;

/**
 * Numeric fields of one result row.
 */
typedef struct RisceRowNumbers {
  /**
   * Sweep value of the row.
   */
  double value;
  /**
   * Metric mean over the included trials.
   */
  double mean;
  /**
   * Standard error of the mean.
   */
  double std_error;
  /**
   * Number of trials included.
   */
  uint64_t trials;
} RisceRowNumbers;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message of the current thread; borrowed, valid until the next
 * failing call on this thread. Never null.
 */
const char *risce_last_error(void);

/**
 * Create a config from a built-in preset (`"scenario1"` or `"scenario2"`).
 *
 * # Safety
 * `name` must be a valid NUL-terminated string; `out` must be a valid
 * pointer. On success `*out` owns the handle and must be released with
 * [`risce_config_free`].
 */
enum RisceStatus risce_config_from_preset(const char *name, struct RisceConfig **out);

/**
 * Parse a config from TOML text.
 *
 * # Safety
 * See [`risce_config_from_preset`].
 */
enum RisceStatus risce_config_from_toml(const char *text, struct RisceConfig **out);

/**
 * Load and validate a config file.
 *
 * # Safety
 * See [`risce_config_from_preset`].
 */
enum RisceStatus risce_config_from_file(const char *path, struct RisceConfig **out);

/**
 * Serialize a config to TOML. The returned string is owned by the caller.
 *
 * # Safety
 * `config` must be a live handle from this library; `out` must be valid.
 */
enum RisceStatus risce_config_to_toml(const struct RisceConfig *config, char **out);

/**
 * Override the Monte Carlo trial count.
 *
 * # Safety
 * `config` must be a live handle from this library.
 */
enum RisceStatus risce_config_set_trials(struct RisceConfig *config, uint64_t trials);

/**
 * Override the master seed.
 *
 * # Safety
 * `config` must be a live handle from this library.
 */
enum RisceStatus risce_config_set_seed(struct RisceConfig *config, uint64_t seed);

/**
 * Override the sweep variable (`k_db | d_r | rho_db | tau_2 | sigma_e`) and
 * its grid.
 *
 * # Safety
 * `config` must be a live handle; `variable` a valid string; `grid` must
 * point to `grid_len` readable doubles.
 */
enum RisceStatus risce_config_set_sweep(struct RisceConfig *config,
                                        const char *variable,
                                        const double *grid,
                                        size_t grid_len);

/**
 * Release a config handle. Null is ignored.
 *
 * # Safety
 * `config` must be a handle created by this library, not yet freed.
 */
void risce_config_free(struct RisceConfig *config);

/**
 * Run the configured Monte Carlo sweep. Deterministic per config and seed.
 *
 * # Safety
 * `config` must be a live handle; `out` must be valid. On success `*out`
 * owns the result set and must be released with [`risce_results_free`].
 */
enum RisceStatus risce_run_sweep(const struct RisceConfig *config, struct RisceResults **out);

/**
 * Rank the modified-DFT design against the DFT design and `random_designs`
 * random designs at size `(n_prime, m)`.
 *
 * # Safety
 * `out` must be a valid pointer; see [`risce_run_sweep`] for ownership.
 */
enum RisceStatus risce_certify(size_t n_prime,
                               size_t m,
                               double beta_bar,
                               size_t random_designs,
                               uint64_t seed,
                               struct RisceResults **out);

/**
 * Number of rows in a result set.
 *
 * # Safety
 * `results` must be a live handle from this library.
 */
size_t risce_results_rows(const struct RisceResults *results);

/**
 * Numeric fields of row `index`.
 *
 * # Safety
 * `results` must be a live handle; `out` must be valid.
 */
enum RisceStatus risce_results_row_numbers(const struct RisceResults *results,
                                           size_t index,
                                           struct RisceRowNumbers *out);

/**
 * Metric name of row `index`; borrowed from the handle, valid until the next
 * call to this accessor on the same handle. Null when out of range.
 *
 * # Safety
 * `results` must be a live handle from this library.
 */
const char *risce_results_metric(const struct RisceResults *results, size_t index);

/**
 * Variant label of row `index`; same lifetime rules as
 * [`risce_results_metric`].
 *
 * # Safety
 * `results` must be a live handle from this library.
 */
const char *risce_results_variant(const struct RisceResults *results, size_t index);

/**
 * Render the result set as the canonical CSV document; owned by the caller.
 *
 * # Safety
 * `results` must be a live handle; `out` must be valid.
 */
enum RisceStatus risce_results_to_csv(const struct RisceResults *results, char **out);

/**
 * Write the canonical CSV file.
 *
 * # Safety
 * `results` must be a live handle; `path` a valid string.
 */
enum RisceStatus risce_results_write_csv(const struct RisceResults *results, const char *path);

/**
 * Release a result-set handle. Null is ignored.
 *
 * # Safety
 * `results` must be a handle created by this library, not yet freed.
 */
void risce_results_free(struct RisceResults *results);

/**
 * Release a string returned through a `char **` out-parameter. Null is
 * ignored.
 *
 * # Safety
 * `s` must originate from this library and not have been freed already.
 */
void risce_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIS_CE_H */
