/* C interface for the carleson-lab numerical laboratory. */

#ifndef CARLESON_LAB_H
#define CARLESON_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every entry point.
typedef enum LabStatus {
  // Success; out-parameters are valid.
  LAB_STATUS_OK = 0,
  // The run completed and produced a report, but at least one gate
  // failed. The report out-parameter is valid.
  LAB_STATUS_GATE_FAILED = 1,
  // Invalid configuration, parameters, or precondition.
  LAB_STATUS_INVALID_INPUT = 2,
  // File-system failure while loading referenced data.
  LAB_STATUS_IO_ERROR = 3,
  // A required pointer argument was null.
  LAB_STATUS_NULL_ARGUMENT = 4,
  // An internal panic was caught at the boundary.
  LAB_STATUS_INTERNAL_PANIC = 5,
} LabStatus;

// A loaded experiment: parsed configuration plus the field and domain it
// describes, ready for pointwise evaluation. Opaque to C.
typedef struct LabExperiment LabExperiment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Returns the most recent error message on this thread, or null if none.
// The caller owns the string: free it with [`lab_string_free`].
char *lab_last_error_message(void);

// Releases a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must be null or a pointer previously returned by this library and
// not yet freed.
void lab_string_free(char *s);

// Runs one laboratory command (`"approximate"`, `"verify"`, `"classify"`,
// `"fatou"`, `"goodlambda"`, or `"sweep"`) against a JSON or TOML
// configuration and returns the report document as pretty-printed JSON.
// Nothing is written to disk. Returns `Ok` when every gate passes,
// `GateFailed` (with the report still written to `report_out`) otherwise.
//
// # Safety
// `config_text` and `command` must be valid NUL-terminated strings;
// `report_out` must be a valid pointer. The returned string must be freed
// with [`lab_string_free`].
enum LabStatus lab_run(const char *config_text, const char *command, char **report_out);

// Loads an experiment (configuration, field, domain) for pointwise
// evaluation. On success writes an owned handle to `out`.
//
// # Safety
// `config_text` must be a valid NUL-terminated string and `out` a valid
// pointer. The handle must be released with [`lab_experiment_free`].
enum LabStatus lab_experiment_new(const char *config_text, struct LabExperiment **out);

// Releases an experiment handle. Null is a no-op.
//
// # Safety
// `exp` must be null or a handle returned by [`lab_experiment_new`] and
// not yet freed.
void lab_experiment_free(struct LabExperiment *exp);

// Evaluates the experiment's field at an ambient point.
//
// # Safety
// `exp` must be a live handle from [`lab_experiment_new`]; `out` must be a
// valid pointer.
enum LabStatus lab_field_value(const struct LabExperiment *exp, double x, double y, double *out);

// Square-functional estimate at the boundary point over `x`: the cone uses
// the configuration's aperture, truncation height `upper`, and a local
// quadrature lattice of resolution `upper / 2^depth`.
//
// # Safety
// `exp` must be a live handle from [`lab_experiment_new`]; `out` must be a
// valid pointer.
enum LabStatus lab_area_function(const struct LabExperiment *exp,
                                 double x,
                                 double upper,
                                 uint32_t depth,
                                 double *out);

// Oscillation-counting function at the boundary point over `x`, using the
// configuration's counting parameters and aperture.
//
// # Safety
// `exp` must be a live handle from [`lab_experiment_new`]; `out` must be a
// valid pointer.
enum LabStatus lab_counting_function(const struct LabExperiment *exp, double x, uint32_t *out);

// Side length of the experiment's root cube (handy for pickers in C).
//
// # Safety
// `exp` must be a live handle from [`lab_experiment_new`]; `out` must be a
// valid pointer.
enum LabStatus lab_root_side(const struct LabExperiment *exp, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CARLESON_LAB_H */
