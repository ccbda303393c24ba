#ifndef FUZZY_MCDM_H
#define FUZZY_MCDM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum FmStatus {
  FM_STATUS_OK = 0,
  FM_STATUS_NULL_POINTER = 1,
  FM_STATUS_INVALID_UTF8 = 2,
  FM_STATUS_INVALID_ARGUMENT = 3,
  FM_STATUS_PARSE_ERROR = 4,
  FM_STATUS_VALIDATION = 5,
  FM_STATUS_INTEGRITY = 6,
  FM_STATUS_INSUFFICIENT_DATA = 7,
  FM_STATUS_NOT_FOUND = 8,
  FM_STATUS_PANIC = 9,
} FmStatus;

// Weight levels; sub-criteria weights are global.
typedef enum FmLevel {
  FM_LEVEL_CRITERIA = 0,
  FM_LEVEL_SUB_CRITERIA = 1,
  FM_LEVEL_ALTERNATIVES = 2,
} FmLevel;

typedef enum FmMode {
  FM_MODE_PESSIMISTIC = 0,
  FM_MODE_NORMAL = 1,
  FM_MODE_OPTIMISTIC = 2,
} FmMode;

// Opaque hierarchy handle.
typedef struct FmHierarchy FmHierarchy;

// Opaque panel under construction: a hierarchy and the sheets added so far.
typedef struct FmPanel FmPanel;

// Opaque evaluation result.
typedef struct FmReport FmReport;

typedef struct FmTfn {
  double lower;
  double modal;
  double upper;
} FmTfn;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *fm_last_error(void);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void fm_string_free(char *s);

// Validate a triangular fuzzy number (finite, lower <= modal <= upper).
//
// # Safety
// `result` must be writable.
enum FmStatus fm_tfn_new(double lower, double modal, double upper, struct FmTfn *result);

// # Safety
// `result` must be writable.
enum FmStatus fm_tfn_add(struct FmTfn a, struct FmTfn b, struct FmTfn *result);

// # Safety
// `result` must be writable.
enum FmStatus fm_tfn_sub(struct FmTfn a, struct FmTfn b, struct FmTfn *result);

// Requires non-negative operands.
//
// # Safety
// `result` must be writable.
enum FmStatus fm_tfn_mul(struct FmTfn a, struct FmTfn b, struct FmTfn *result);

// Requires a non-negative dividend and a strictly positive divisor.
//
// # Safety
// `result` must be writable.
enum FmStatus fm_tfn_div(struct FmTfn a, struct FmTfn b, struct FmTfn *result);

// # Safety
// `result` must be writable.
enum FmStatus fm_tfn_reciprocal(struct FmTfn a, struct FmTfn *result);

// # Safety
// `result` must be writable.
enum FmStatus fm_tfn_complement(struct FmTfn a, struct FmTfn *result);

// # Safety
// `result` must be writable.
enum FmStatus fm_tfn_membership(struct FmTfn a, double x, double *result);

// Look up a linguistic term (case-insensitive) in the canonical scale.
//
// # Safety
// `term` must be a NUL-terminated string; `scale` and `reciprocal` writable.
enum FmStatus fm_scale_of(const char *term, struct FmTfn *scale, struct FmTfn *reciprocal);

// Create a hierarchy from a built-in preset name.
//
// # Safety
// `name` must be a NUL-terminated string; `result` writable.
enum FmStatus fm_hierarchy_preset(const char *name, struct FmHierarchy **result);

// Parse and validate a hierarchy from JSON (`schemaVersion` optional).
//
// # Safety
// `json` must be a NUL-terminated string; `result` writable.
enum FmStatus fm_hierarchy_from_json(const char *json, struct FmHierarchy **result);

// # Safety
// `h` must come from this library and not have been freed. NULL is ignored.
void fm_hierarchy_free(struct FmHierarchy *h);

// # Safety
// `h` must be a live handle; `result` writable.
enum FmStatus fm_hierarchy_set_count(const struct FmHierarchy *h, size_t *result);

// # Safety
// `h` must be a live handle; `result` writable.
enum FmStatus fm_hierarchy_question_count(const struct FmHierarchy *h, size_t *result);

// SHA-256 content hash (lowercase hex). Free with `fm_string_free`.
//
// # Safety
// `h` must be a live handle; `result` writable.
enum FmStatus fm_hierarchy_hash(const struct FmHierarchy *h, char **result);

// Start a panel for a hierarchy; the hierarchy is copied.
//
// # Safety
// `h` must be a live handle; `result` writable.
enum FmStatus fm_panel_new(const struct FmHierarchy *h, struct FmPanel **result);

// Add one response sheet given as JSON. Every problem in the sheet is
// reported in the error message.
//
// # Safety
// `panel` must be a live handle; `json` a NUL-terminated string.
enum FmStatus fm_panel_add_sheet_json(struct FmPanel *panel, const char *json);

// # Safety
// `panel` must be a live handle; `result` writable.
enum FmStatus fm_panel_size(const struct FmPanel *panel, size_t *result);

// Evaluate every sheet added so far. All sheets must be complete.
//
// # Safety
// `panel` must be a live handle; `result` writable.
enum FmStatus fm_panel_evaluate(const struct FmPanel *panel, struct FmReport **result);

// # Safety
// `panel` must come from this library and not have been freed. NULL is ignored.
void fm_panel_free(struct FmPanel *panel);

// Report as JSON. Free with `fm_string_free`.
//
// # Safety
// `r` must be a live handle; `result` writable.
enum FmStatus fm_report_to_json(const struct FmReport *r, char **result);

// Report as CSV (`level,node,mode,decision_maker,weight`). Free with
// `fm_string_free`.
//
// # Safety
// `r` must be a live handle; `result` writable.
enum FmStatus fm_report_to_csv(const struct FmReport *r, char **result);

// # Safety
// `r` must be a live handle; `result` writable.
enum FmStatus fm_report_panel_size(const struct FmReport *r, size_t *result);

// One weight from the report. `decision_maker` NULL selects the panel
// aggregate.
//
// # Safety
// `r` must be a live handle; strings NUL-terminated or NULL where allowed;
// `result` writable.
enum FmStatus fm_report_weight(const struct FmReport *r,
                               const char *decision_maker,
                               enum FmLevel level,
                               enum FmMode mode,
                               const char *node,
                               double *result);

// # Safety
// `r` must come from this library and not have been freed. NULL is ignored.
void fm_report_free(struct FmReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FUZZY_MCDM_H */
