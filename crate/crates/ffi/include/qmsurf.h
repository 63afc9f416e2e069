#ifndef QMSURF_H
#define QMSURF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QmsStatus {
  QMS_STATUS_OK = 0,
  QMS_STATUS_NULL_POINTER = 1,
  QMS_STATUS_INVALID_UTF8 = 2,
  /*
   Malformed input: curve, newform, field, prime or modulus.
   */
  QMS_STATUS_INVALID_INPUT = 3,
  /*
   A mathematical check failed (trace mismatch, probe failure, ...).
   */
  QMS_STATUS_VERIFICATION_FAILED = 4,
  /*
   Not enough eigenvalue or trace data to decide.
   */
  QMS_STATUS_INCOMPLETE_DATA = 5,
  /*
   Caller buffer too small; the required length was written.
   */
  QMS_STATUS_BUFFER_TOO_SMALL = 6,
  QMS_STATUS_PANIC = 7,
} QmsStatus;

typedef struct QmsCurve QmsCurve;

typedef struct QmsNewform QmsNewform;

typedef struct QmsTraceTable QmsTraceTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; owned by the library
 and valid until the next call on the thread.
 */
const char *qms_last_error(void);

/*
 # Safety
 `s` must come from this library or be null.
 */
void qms_string_free(char *s);

/*
 Parse a curve document `{"field": ..., "coeffs": [...]}`.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QmsStatus qms_curve_from_json(const char *json, struct QmsCurve **out);

/*
 # Safety
 `curve` must come from `qms_curve_from_json` or be null.
 */
void qms_curve_free(struct QmsCurve *curve);

/*
 Hex SHA-256 of the canonical curve document.

 # Safety
 Valid handle and output pointer.
 */
enum QmsStatus qms_curve_hash(const struct QmsCurve *curve, char **out);

/*
 Imaginary quadratic field `Q(sqrt(-d))` of the curve.

 # Safety
 Valid handle and output pointer.
 */
enum QmsStatus qms_curve_field(const struct QmsCurve *curve, uint32_t *d);

/*
 Traces at all primes of norm up to `bound`; the square identity is
 checked up to `square_check_bound`.

 # Safety
 Valid handle and output pointer.
 */
enum QmsStatus qms_trace_table_new(const struct QmsCurve *curve,
                                   uint64_t bound,
                                   uint64_t square_check_bound,
                                   bool parallel,
                                   struct QmsTraceTable **out);

/*
 # Safety
 `table` must come from `qms_trace_table_new` or be null.
 */
void qms_trace_table_free(struct QmsTraceTable *table);

/*
 Number of good primes in the table.

 # Safety
 `table` must be a valid handle or null (which yields 0).
 */
size_t qms_trace_table_len(const struct QmsTraceTable *table);

/*
 Trace at the prime generated by `prime` (e.g. `"-3+w"`).
 `IncompleteData` if the prime is bad or beyond the table bound.

 # Safety
 Valid handle, string and output pointer.
 */
enum QmsStatus qms_trace_table_trace(const struct QmsTraceTable *table,
                                     const char *prime,
                                     int64_t *out);

/*
 The table as a JSON document.

 # Safety
 Valid handle and output pointer.
 */
enum QmsStatus qms_trace_table_json(const struct QmsTraceTable *table, char **out);

/*
 `Ok` with a witnessing split pair, `IncompleteData` when undecided.

 # Safety
 Valid handle.
 */
enum QmsStatus qms_genuineness(const struct QmsTraceTable *table);

/*
 Parse a newform document.

 # Safety
 NUL-terminated string and valid output pointer.
 */
enum QmsStatus qms_newform_from_json(const char *json, struct QmsNewform **out);

/*
 # Safety
 `form` must come from `qms_newform_from_json` or be null.
 */
void qms_newform_free(struct QmsNewform *form);

/*
 Compare curve traces with newform eigenvalues at every good prime of
 norm up to `bound`, then at the twist prime (`NULL` for the field
 default). On success `report` receives the JSON report.

 # Safety
 Valid handles; `twist_prime` may be null; `report` may be null.
 */
enum QmsStatus qms_livne_verify(const struct QmsTraceTable *table,
                                const struct QmsNewform *form,
                                uint64_t bound,
                                const char *twist_prime,
                                char **report);

/*
 Invariant factors of the ray class group of `modulus` (`"2^3,3+w,-5+2*w"`)
 over `Q(sqrt(-d))`. Writes at most `cap` factors and their count to `len`.

 # Safety
 `modulus` NUL-terminated; `factors` valid for `cap` entries; `len` valid.
 */
enum QmsStatus qms_ray_class_invariants(uint32_t d,
                                        const char *modulus,
                                        uint64_t *factors,
                                        size_t cap,
                                        size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMSURF_H */
