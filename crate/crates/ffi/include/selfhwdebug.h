#ifndef SELFHWDEBUG_H
#define SELFHWDEBUG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HwdStatus {
  HWD_STATUS_OK = 0,
  HWD_STATUS_NULL_ARGUMENT = 1,
  HWD_STATUS_INVALID_UTF8 = 2,
  HWD_STATUS_NOT_FOUND = 3,
  HWD_STATUS_INVALID_ARGUMENT = 4,
  HWD_STATUS_CORPUS_ERROR = 5,
  HWD_STATUS_CHECKS_ERROR = 6,
  HWD_STATUS_RUN_ERROR = 7,
  HWD_STATUS_PANIC = 99,
} HwdStatus;

typedef enum HwdVerdict {
  HWD_VERDICT_PASS = 0,
  HWD_VERDICT_FAIL = 1,
  HWD_VERDICT_INDETERMINATE = 2,
} HwdVerdict;

typedef enum HwdReportFormat {
  HWD_REPORT_FORMAT_MARKDOWN = 0,
  HWD_REPORT_FORMAT_CSV = 1,
  HWD_REPORT_FORMAT_JSON = 2,
} HwdReportFormat;

/**
 * Loaded corpus. Opaque to C.
 */
typedef struct HwdCorpus HwdCorpus;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a corpus directory. On success `*out` owns a new handle.
 *
 * # Safety
 * `root` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum HwdStatus hwd_corpus_load(const char *root, struct HwdCorpus **out);

/**
 * Releases a corpus handle. Null is ignored.
 *
 * # Safety
 * `corpus` must come from `hwd_corpus_load` and not be used afterwards.
 */
void hwd_corpus_free(struct HwdCorpus *corpus);

/**
 * Number of CWE categories.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be valid for writes.
 */
enum HwdStatus hwd_corpus_category_count(const struct HwdCorpus *corpus, size_t *out);

/**
 * Number of samples across all categories.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be valid for writes.
 */
enum HwdStatus hwd_corpus_sample_count(const struct HwdCorpus *corpus, size_t *out);

/**
 * Category at `index` in manifest order as JSON:
 * `{"id", "title", "description", "samples": [{"sample_id", "role"}]}`.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be valid for writes.
 */
enum HwdStatus hwd_corpus_category_json(const struct HwdCorpus *corpus, size_t index, char **out);

/**
 * Full sample record (code, checks, annotations) as JSON.
 *
 * # Safety
 * `corpus` must be a live handle, `sample_id` a NUL-terminated string and
 * `out` valid for writes.
 */
enum HwdStatus hwd_corpus_sample_json(const struct HwdCorpus *corpus,
                                      const char *sample_id,
                                      char **out);

/**
 * Evaluates a JSON array of checks against Verilog source. `verdict_json`
 * may be null; otherwise it receives the full verdict as JSON.
 *
 * # Safety
 * String arguments must be NUL-terminated; `status` must be valid for
 * writes; `verdict_json` must be null or valid for writes.
 */
enum HwdStatus hwd_evaluate_checks(const char *source,
                                   const char *checks_json,
                                   enum HwdVerdict *status,
                                   char **verdict_json);

/**
 * Extracts repaired Verilog from a model reply. Returns `NotFound` (with
 * `*out` null) when the reply holds no module.
 *
 * # Safety
 * `reply` must be NUL-terminated; `out` must be valid for writes.
 */
enum HwdStatus hwd_extract_code(const char *reply, char **out);

/**
 * Aggregates a JSON array of `{"cwe_id", "config_label", "status"}`
 * outcomes (status is "Pass", "Fail" or "Indeterminate") and renders the
 * efficacy table.
 *
 * # Safety
 * `outcomes_json` must be NUL-terminated; `out` must be valid for writes.
 */
enum HwdStatus hwd_render_report(const char *outcomes_json,
                                 enum HwdReportFormat format,
                                 char **out);

/**
 * Re-renders the report of a finished run directory.
 *
 * # Safety
 * `run_dir` must be NUL-terminated; `out` must be valid for writes.
 */
enum HwdStatus hwd_run_report(const char *run_dir, enum HwdReportFormat format, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void hwd_string_free(char *s);

/**
 * Library version; static storage, do not free.
 */
const char *hwd_version(void);

/**
 * Message for the last failed call on this thread, or null after a
 * successful call. Valid until the next call on the same thread.
 */
const char *hwd_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SELFHWDEBUG_H */
