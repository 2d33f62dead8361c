#ifndef DNLAB_H
#define DNLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DnlabStatus {
  DNLAB_STATUS_OK = 0,
  DNLAB_STATUS_NULL_POINTER = 1,
  DNLAB_STATUS_INVALID_UTF8 = 2,
  // Rejected configuration or malformed input text.
  DNLAB_STATUS_CONFIG = 3,
  DNLAB_STATUS_IO = 4,
  // A solver, law or mesh check failed.
  DNLAB_STATUS_NUMERICAL = 5,
  // The run started but a step failed; the handle is still produced.
  DNLAB_STATUS_RUN_FAILED = 6,
  DNLAB_STATUS_NOT_FOUND = 7,
  DNLAB_STATUS_PANIC = 8,
} DnlabStatus;

// Opaque experiment configuration.
typedef struct DnlabConfig DnlabConfig;

// Opaque record of a finished (or failed) run.
typedef struct DnlabRun DnlabRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dnlab_version(void);

// Description of the last failure on this thread (empty if none). The
// pointer stays valid until the next failing call on the same thread.
const char *dnlab_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void dnlab_string_free(char *s);

// Creates a configuration holding the defaults.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum DnlabStatus dnlab_config_default(struct DnlabConfig **out);

// Parses configuration text (`key = value` lines).
//
// # Safety
// `text` must be a NUL-terminated string and `out` writable.
enum DnlabStatus dnlab_config_parse(const char *text, struct DnlabConfig **out);

// Sets one configuration key.
//
// # Safety
// `config` must be a live handle; `key` and `value` NUL-terminated.
enum DnlabStatus dnlab_config_set(struct DnlabConfig *config, const char *key, const char *value);

// Checks the configuration without running anything.
//
// # Safety
// `config` must be a live handle.
enum DnlabStatus dnlab_config_validate(const struct DnlabConfig *config);

// Canonical text of the configuration.
//
// # Safety
// `config` must be a live handle and `out` writable.
enum DnlabStatus dnlab_config_to_text(const struct DnlabConfig *config, char **out);

// SHA-256 of the canonical configuration text, as lowercase hex.
//
// # Safety
// `config` must be a live handle and `out` writable.
enum DnlabStatus dnlab_config_hash(const struct DnlabConfig *config, char **out);

// # Safety
// `config` must be null or a handle not freed before.
void dnlab_config_free(struct DnlabConfig *config);

// Runs the configured pipeline, writing artifacts into `out_dir`.
// `workers` = 0 uses the available parallelism.
//
// Returns `Ok`, or `RunFailed` with a valid run handle when a step failed
// after validation; any other status leaves `*out` null.
//
// # Safety
// `config` must be a live handle, `out_dir` NUL-terminated and `out`
// writable.
enum DnlabStatus dnlab_run(const struct DnlabConfig *config,
                           const char *out_dir,
                           size_t workers,
                           struct DnlabRun **out);

// Whether every step of the run completed.
//
// # Safety
// `run` must be null or a live handle.
bool dnlab_run_succeeded(const struct DnlabRun *run);

// The run manifest as JSON.
//
// # Safety
// `run` must be a live handle and `out` writable.
enum DnlabStatus dnlab_run_manifest_json(const struct DnlabRun *run, char **out);

// Reads one scalar metric from the run summary (`NotFound` if absent).
//
// # Safety
// `run` must be a live handle, `name` NUL-terminated, `out` writable.
enum DnlabStatus dnlab_run_metric(const struct DnlabRun *run, const char *name, double *out);

// # Safety
// `run` must be null or a handle not freed before.
void dnlab_run_free(struct DnlabRun *run);

// Text report over `count` run directories. `*all_passed` is set to
// whether no pipeline failed its thresholds.
//
// # Safety
// `dirs` must point to `count` NUL-terminated strings; `out` and
// `all_passed` must be writable.
enum DnlabStatus dnlab_report(const char *const *dirs, size_t count, char **out, bool *all_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DNLAB_H */
