#ifndef BISAC_H
#define BISAC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BisacStatus {
  BISAC_STATUS_OK = 0,
  BISAC_STATUS_INVALID_ARGUMENT = 1,
  BISAC_STATUS_PARSE = 2,
  BISAC_STATUS_VALIDATION = 3,
  BISAC_STATUS_INFEASIBLE = 4,
  BISAC_STATUS_SOLVER_FAILURE = 5,
  BISAC_STATUS_NULL_POINTER = 6,
  BISAC_STATUS_PANIC = 7,
  BISAC_STATUS_IO = 8,
} BisacStatus;

// Scenario handle.
typedef struct BisacScenario BisacScenario;

// Solved beamformer with its metrics.
typedef struct BisacSolution BisacSolution;

// Metrics of a solution. SINRs are linear, power in mW.
typedef struct BisacMetrics {
  double rate;
  double gamma_u;
  double gamma_t;
  double gamma_ap;
  double detection_probability;
  double power;
  size_t outer_iterations;
  size_t sca_iterations;
  bool converged;
} BisacMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// New scenario with the reference defaults. Never returns null.
struct BisacScenario *bisac_scenario_default(void);

// Parse a scenario from TOML text; keys not given keep their defaults.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum BisacStatus bisac_scenario_from_toml(const char *toml, struct BisacScenario **out);

// Set one numeric scenario key, e.g. `p_t_dbm`. The scenario is left
// unchanged on error.
//
// # Safety
// `scenario` must come from this library and `key` be NUL-terminated.
enum BisacStatus bisac_scenario_set(struct BisacScenario *scenario, const char *key, double value);

// # Safety
// `scenario` must come from this library and not be used afterwards.
void bisac_scenario_free(struct BisacScenario *scenario);

// Maximize the UE rate for a scenario.
//
// # Safety
// `scenario` must come from this library and `out` be a valid pointer.
enum BisacStatus bisac_solve(const struct BisacScenario *scenario, struct BisacSolution **out);

// # Safety
// `solution` must come from this library and `out` be a valid pointer.
enum BisacStatus bisac_solution_metrics(const struct BisacSolution *solution,
                                        struct BisacMetrics *out);

// Number of transmit antennas `N_t`; the beamformer has `N_t + 2` columns.
//
// # Safety
// `solution` must come from this library or be null (returns 0).
size_t bisac_solution_n_t(const struct BisacSolution *solution);

// Copy the beamformer, column-major, into `re` and `im`, each holding
// `len = N_t·(N_t + 2)` values. Columns are the UE stream, the tag stream
// and then the probing streams.
//
// # Safety
// `re` and `im` must each point to `len` writable doubles.
enum BisacStatus bisac_solution_beamformer(const struct BisacSolution *solution,
                                           double *re,
                                           double *im,
                                           size_t len);

// # Safety
// `solution` must come from this library and not be used afterwards.
void bisac_solution_free(struct BisacSolution *solution);

// Closed-form detection probability for a linear echo SINR and a
// false-alarm target in (0, 1).
//
// # Safety
// `out` must be a valid pointer.
enum BisacStatus bisac_detection_probability(double gamma_ap, double p_f, double *out);

// Copy the last error message of this thread into `buf` as a
// NUL-terminated string, truncated to `len` bytes. Returns the length the
// full message needs including the terminator. `buf` may be null to query.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t bisac_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *bisac_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BISAC_H */
