/* C interface for the racediag data race prediction library. */

#ifndef RACEDIAG_H
#define RACEDIAG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Analyzer selector for [`racediag_count_races`].
typedef enum racediag_algo {
  RACEDIAG_ALGO_FASTTRACK = 0,
  RACEDIAG_ALGO_HB = 1,
  RACEDIAG_ALGO_SHB = 2,
  RACEDIAG_ALGO_SSHB = 3,
} racediag_algo;

// Status codes returned by the API.
typedef enum racediag_status {
  RACEDIAG_OK = 0,
  // A required pointer argument was null.
  RACEDIAG_NULL_ARGUMENT = 1,
  // Input text was not valid UTF-8 or not a parseable trace.
  RACEDIAG_PARSE_ERROR = 2,
  // The trace failed well-formedness validation.
  RACEDIAG_INVALID_TRACE = 3,
  // File could not be read or written.
  RACEDIAG_IO_ERROR = 4,
  // An index was out of range.
  RACEDIAG_OUT_OF_RANGE = 5,
} racediag_status;

// Opaque diagnosis result, bound to the trace it was computed from.
typedef struct racediag_report racediag_report;

// Opaque parsed trace.
typedef struct racediag_trace racediag_trace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; do not free.
const char *racediag_version(void);

// Message for the most recent failure on this thread, or null. Valid until
// the next failing call on the same thread; do not free.
const char *racediag_last_error(void);

// Parses a trace from UTF-8 text in the canonical line format.
//
// # Safety
// `text` must be a valid nul-terminated string and `out` a valid pointer.
enum racediag_status racediag_trace_parse(const char *text, struct racediag_trace **out);

// Reads and parses a trace file.
//
// # Safety
// `path` must be a valid nul-terminated string and `out` a valid pointer.
enum racediag_status racediag_trace_load(const char *path, struct racediag_trace **out);

// Releases a trace handle; null is ignored.
//
// # Safety
// `t` must be a pointer from this library not yet freed.
void racediag_trace_free(struct racediag_trace *t);

// Number of events in the trace; 0 for null.
//
// # Safety
// `t` must be a live trace handle or null.
uint64_t racediag_trace_events(const struct racediag_trace *t);

// Number of distinct threads in the trace; 0 for null.
//
// # Safety
// `t` must be a live trace handle or null.
uint64_t racediag_trace_threads(const struct racediag_trace *t);

// Runs one analyzer and reports its race counts by category.
//
// # Safety
// `t` must be a live trace handle; count outputs may be null to skip.
enum racediag_status racediag_count_races(const struct racediag_trace *t,
                                          enum racediag_algo algo,
                                          uint64_t *out_total,
                                          uint64_t *out_ww,
                                          uint64_t *out_wr,
                                          uint64_t *out_rw);

// Runs the two-phase diagnosis, optionally with the lockset filter.
//
// # Safety
// `t` must be a live trace handle and `out` a valid pointer.
enum racediag_status racediag_diagnose(const struct racediag_trace *t,
                                       bool lockset_filter,
                                       struct racediag_report **out);

// Releases a report handle; null is ignored.
//
// # Safety
// `r` must be a pointer from this library not yet freed.
void racediag_report_free(struct racediag_report *r);

// Top-level verdict counts of a diagnosis.
//
// # Safety
// `r` must be a live report handle; count outputs may be null to skip.
enum racediag_status racediag_report_counts(const struct racediag_report *r,
                                            uint64_t *out_races,
                                            uint64_t *out_guaranteed,
                                            uint64_t *out_maybe,
                                            uint64_t *out_lockset_fp);

// Verdict of the i-th race: 1 guaranteed, 2 maybe. Event positions of the
// pair go to `out_first`/`out_second`.
//
// # Safety
// `r` must be a live report handle; outputs may be null to skip.
enum racediag_status racediag_report_race(const struct racediag_report *r,
                                          uint64_t index,
                                          uint64_t *out_first,
                                          uint64_t *out_second,
                                          uint32_t *out_verdict,
                                          bool *out_lockset_fp);

// Full diagnosis as a JSON document; release with
// [`racediag_string_free`].
//
// # Safety
// `r` must be a live report handle.
char *racediag_report_json(const struct racediag_report *r);

// Frees a string returned by this library; null is ignored.
//
// # Safety
// `s` must have been returned by this library and not yet freed.
void racediag_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* RACEDIAG_H */
