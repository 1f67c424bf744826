/* Generated by cbindgen from crates/ffi. Do not edit. */

#ifndef POWLGEN_H
#define POWLGEN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  POWL_STATUS_OK = 0,
  POWL_STATUS_NULL_ARGUMENT = 1,
  POWL_STATUS_INVALID_UTF8 = 2,
  /**
   * The script or reply did not yield a model.
   */
  POWL_STATUS_INVALID_MODEL = 3,
  POWL_STATUS_UNKNOWN_FORMAT = 4,
  POWL_STATUS_TRANSLATION = 5,
  /**
   * The event log could not be read or written.
   */
  POWL_STATUS_LOG = 6,
  POWL_STATUS_INTERNAL = 7,
} PowlStatus;

/**
 * Opaque model handle.
 */
typedef struct PowlModel PowlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a model from a bare construction script.
 *
 * # Safety
 * `script` must be a NUL-terminated string; `out` must be writable.
 */
PowlStatus powl_model_from_script(const char *script, PowlModel **out);

/**
 * Builds a model from an LLM reply; the first code block is used.
 *
 * # Safety
 * As [`powl_model_from_script`].
 */
PowlStatus powl_model_from_response(const char *response, PowlModel **out);

/**
 * Diagnostics for a reply or script as a JSON array. The status is `OK`
 * whenever checking ran, even if the array reports critical problems.
 *
 * # Safety
 * `response` must be a NUL-terminated string; `out_json` must be writable.
 */
PowlStatus powl_validate(const char *response, char **out_json);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be freed twice.
 */
void powl_model_free(PowlModel *model);

/**
 * The canonical construction script for the model.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
PowlStatus powl_model_render(const PowlModel *model, char **out);

/**
 * Serializes the model as `bpmn`, `pnml`, `script`, `dot` (Petri net) or
 * `json` (model tree).
 *
 * # Safety
 * `model` must be a live handle; `format` a NUL-terminated string; `out` writable.
 */
PowlStatus powl_model_export(const PowlModel *model, const char *format, char **out);

/**
 * Number of distinct traces with each loop repeated at most `loop_cap` times.
 *
 * # Safety
 * `model` must be a live handle; `out` writable.
 */
PowlStatus powl_variant_count(const PowlModel *model, size_t loop_cap, size_t *out);

/**
 * Event log with one case per trace variant, as CSV.
 *
 * # Safety
 * `model` must be a live handle; `out` writable.
 */
PowlStatus powl_simulate_log_csv(const PowlModel *model, size_t loop_cap, char **out);

/**
 * Fitness, precision and quality of the model against a CSV log.
 *
 * # Safety
 * `model` must be a live handle; `log_csv` a NUL-terminated string; the three
 * outputs writable.
 */
PowlStatus powl_evaluate_csv(const PowlModel *model,
                             const char *log_csv,
                             double *fitness,
                             double *precision,
                             double *quality);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void powl_string_free(char *s);

/**
 * Message for the last failed call on this thread; empty after a success.
 */
const char *powl_last_error(void);

/**
 * Library version, statically allocated.
 */
const char *powl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POWLGEN_H */
