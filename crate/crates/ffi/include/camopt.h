#ifndef CAMOPT_H
#define CAMOPT_H

/* Generated by cbindgen from the camopt-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CamoptStatus {
  CAMOPT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CAMOPT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  CAMOPT_STATUS_INVALID_UTF8 = 2,
  /**
   * JSON input could not be parsed.
   */
  CAMOPT_STATUS_PARSE_ERROR = 3,
  /**
   * Input violated a documented invariant.
   */
  CAMOPT_STATUS_INVALID_INPUT = 4,
  /**
   * The algorithm id is not one of the nine published identifiers.
   */
  CAMOPT_STATUS_UNKNOWN_ALGORITHM = 5,
  /**
   * Simulation or optimization failed.
   */
  CAMOPT_STATUS_DOMAIN_ERROR = 6,
  /**
   * The index passed to an accessor is out of range.
   */
  CAMOPT_STATUS_OUT_OF_RANGE = 7,
  /**
   * The library panicked; state is unchanged but the call did nothing.
   */
  CAMOPT_STATUS_PANIC = 8,
} CamoptStatus;

/**
 * Opaque handle to a dangerous situation.
 */
typedef struct CamoptSituation CamoptSituation;

/**
 * Opaque handle to a solved situation: the maneuvers, the scored session
 * result, and the pre-maneuver conjunction list.
 */
typedef struct CamoptSolution CamoptSolution;

/**
 * One impulsive burn in the inertial frame (m/s components, epoch in days
 * mjd2000).
 */
typedef struct CamoptManeuver {
  double dvx;
  double dvy;
  double dvz;
  double epoch;
} CamoptManeuver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread; the pointer stays
 * valid until the next failing call on the same thread. Never null.
 */
const char *camopt_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *camopt_version(void);

/**
 * Parses a situation from its JSON document.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum CamoptStatus camopt_situation_from_json(const char *json, struct CamoptSituation **out);

/**
 * Generates stream `index` of the seeded random situation family with
 * `n_debris` debris objects (0 keeps the default of 10).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CamoptStatus camopt_situation_generate(uint64_t seed,
                                            uint64_t index,
                                            uint32_t n_debris,
                                            struct CamoptSituation **out);

/**
 * Serializes a situation to pretty-printed JSON (free the string with
 * `camopt_string_free`).
 *
 * # Safety
 * `situation` must be a live handle from this library, `out` valid.
 */
enum CamoptStatus camopt_situation_to_json(const struct CamoptSituation *situation, char **out);

/**
 * Number of debris objects in the situation.
 *
 * # Safety
 * `situation` must be a live handle or null (returns 0).
 */
uintptr_t camopt_situation_debris_count(const struct CamoptSituation *situation);

/**
 * Releases a situation handle; null is ignored.
 *
 * # Safety
 * `situation` must be null or a handle returned by this library, not yet
 * freed.
 */
void camopt_situation_free(struct CamoptSituation *situation);

/**
 * Runs one of the nine algorithms on the situation. `algorithm` is the
 * published identifier (for example "gs-ce"); `config_json` is an optional
 * configuration document (null for defaults).
 *
 * # Safety
 * Pointers must be valid; `config_json` may be null.
 */
enum CamoptStatus camopt_solve(const struct CamoptSituation *situation,
                               const char *algorithm,
                               const char *config_json,
                               struct CamoptSolution **out);

/**
 * Total reward of the solution (NaN for a null handle).
 *
 * # Safety
 * `solution` must be a live handle or null.
 */
double camopt_solution_reward(const struct CamoptSolution *solution);

/**
 * Total delta-v in m/s (NaN for a null handle).
 *
 * # Safety
 * `solution` must be a live handle or null.
 */
double camopt_solution_fuel(const struct CamoptSolution *solution);

/**
 * Combined collision probability after the maneuvers (NaN for null).
 *
 * # Safety
 * `solution` must be a live handle or null.
 */
double camopt_solution_total_probability(const struct CamoptSolution *solution);

/**
 * Number of maneuvers in the solution.
 *
 * # Safety
 * `solution` must be a live handle or null (returns 0).
 */
uintptr_t camopt_solution_maneuver_count(const struct CamoptSolution *solution);

/**
 * Copies maneuver `index` into `out`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CamoptStatus camopt_solution_maneuver(const struct CamoptSolution *solution,
                                           uintptr_t index,
                                           struct CamoptManeuver *out);

/**
 * Serializes the full solution (maneuvers, scored result, pre-maneuver
 * conjunctions) as pretty-printed JSON.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CamoptStatus camopt_solution_to_json(const struct CamoptSolution *solution, char **out);

/**
 * Releases a solution handle; null is ignored.
 *
 * # Safety
 * `solution` must be null or a handle returned by this library, not yet
 * freed.
 */
void camopt_solution_free(struct CamoptSolution *solution);

/**
 * Screens the situation (optionally with a JSON maneuver list applied) and
 * returns the conjunction table as a JSON array.
 *
 * # Safety
 * `situation` and `out` must be valid; `maneuvers_json` and `config_json`
 * may be null.
 */
enum CamoptStatus camopt_conjunctions_json(const struct CamoptSituation *situation,
                                           const char *maneuvers_json,
                                           const char *config_json,
                                           char **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void camopt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAMOPT_H */
