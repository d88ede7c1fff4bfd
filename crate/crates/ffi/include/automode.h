#ifndef AUTOMODE_H
#define AUTOMODE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum AmStatus {
  AM_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  AM_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  AM_STATUS_INVALID_UTF8 = 2,
  /**
   * An argument value was rejected (unknown profile, bad map file).
   */
  AM_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The model has syntax or well-formedness errors.
   */
  AM_STATUS_MODEL_ERROR = 4,
  /**
   * Simulation failed at run time.
   */
  AM_STATUS_SIMULATION_ERROR = 5,
  /**
   * A transformation rejected its input.
   */
  AM_STATUS_TRANSFORM_ERROR = 6,
  /**
   * An internal panic was caught at the boundary.
   */
  AM_STATUS_INTERNAL = 7,
} AmStatus;

/**
 * Opaque project handle.
 */
typedef struct AmProject AmProject;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *am_version(void);

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next call into the library on this thread.
 */
const char *am_last_error(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` is NULL or a string returned by this library and not yet freed.
 */
void am_string_free(char *s);

/**
 * Parses DSL text into a new project handle.
 *
 * # Safety
 * `source` is a NUL-terminated string; `out` is valid for a pointer write.
 */
enum AmStatus am_project_parse(const char *source, struct AmProject **out);

/**
 * Releases a project handle.
 *
 * # Safety
 * `p` is NULL or a handle returned by this library and not yet freed.
 */
void am_project_free(struct AmProject *p);

/**
 * Writes the canonical DSL text of the project to `*out`.
 *
 * # Safety
 * `p` is a live handle; `out` is valid for a pointer write.
 */
enum AmStatus am_project_serialize(const struct AmProject *p, char **out);

/**
 * Runs every static check for the project's level under the named target
 * profile (`osek`, `strict` or `permissive`, NULL for `osek`). The rendered
 * diagnostics go to `*report`; the status is `MODEL_ERROR` when any of them
 * is an error.
 *
 * # Safety
 * `p` is a live handle; `profile` is NULL or a NUL-terminated string;
 * `report` is valid for a pointer write.
 */
enum AmStatus am_project_check(const struct AmProject *p, const char *profile, char **report);

/**
 * Simulates the system component on an input trace (CSV) and writes the
 * output trace to `*out`. `ticks == 0` runs for the length of the input.
 *
 * # Safety
 * `p` is a live handle; `inputs_csv` is a NUL-terminated string; `out` is
 * valid for a pointer write.
 */
enum AmStatus am_project_simulate(const struct AmProject *p,
                                  const char *inputs_csv,
                                  size_t ticks,
                                  char **out);

/**
 * Replaces the named MTD component by an equivalent dataflow network.
 *
 * # Safety
 * `p` is a live handle; `component` is a NUL-terminated string; `out` is
 * valid for a pointer write.
 */
enum AmStatus am_transform_mtd_to_dataflow(const struct AmProject *p,
                                           const char *component,
                                           bool expose_mode_port,
                                           struct AmProject **out);

/**
 * Dissolves `depth` levels of the system hierarchy into one network.
 *
 * # Safety
 * `p` is a live handle; `out` is valid for a pointer write.
 */
enum AmStatus am_transform_flatten(const struct AmProject *p, size_t depth, struct AmProject **out);

/**
 * Refines abstract types by the given refinement map text. Warnings, if
 * any, go to `*report` (may be NULL to discard them).
 *
 * # Safety
 * `p` is a live handle; `map` is a NUL-terminated string; `report` is NULL
 * or valid for a pointer write; `out` is valid for a pointer write.
 */
enum AmStatus am_transform_refine(const struct AmProject *p,
                                  const char *map,
                                  char **report,
                                  struct AmProject **out);

/**
 * Groups the system network into one cluster per rate.
 *
 * # Safety
 * `p` is a live handle; `report` is NULL or valid for a pointer write;
 * `out` is valid for a pointer write.
 */
enum AmStatus am_transform_cluster(const struct AmProject *p,
                                   bool insert_delays,
                                   char **report,
                                   struct AmProject **out);

/**
 * Writes the deployment manifest of a deployed project to `*out`.
 *
 * # Safety
 * `p` is a live handle; `out` is valid for a pointer write.
 */
enum AmStatus am_project_manifest(const struct AmProject *p, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUTOMODE_H */
