/*
 * Copyright 2026 The wicount Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the wicount library: dataset ingestion and synthesis,
 * experiment orchestration (prepare / train / evaluate / analyze / report)
 * and a few pure helpers. Objects are opaque handles released with the
 * matching *_free function. Strings returned through char** are owned by
 * the caller and released with wc_string_free. Every call returns a
 * wc_status; on failure wc_last_error() describes the problem (per thread).
 */
#ifndef WICOUNT_WICOUNT_H_
#define WICOUNT_WICOUNT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WC_API __declspec(dllexport)
#else
#define WC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wc_status {
  WC_OK = 0,
  WC_ERR_INVALID_ARGUMENT = 1,
  WC_ERR_INGESTION = 2, /* malformed or missing dataset files */
  WC_ERR_CONTRACT = 3,  /* precondition violated */
  WC_ERR_CONFIG = 4,    /* invalid configuration */
  WC_ERR_NUMERIC = 5,   /* non-finite loss or gradient */
  WC_ERR_CHECKPOINT = 6,
  WC_ERR_IO = 7,
  WC_ERR_INTERNAL = 99
} wc_status;

typedef enum wc_log_level {
  WC_LOG_DEBUG = 0,
  WC_LOG_INFO = 1,
  WC_LOG_WARN = 2,
  WC_LOG_ERROR = 3
} wc_log_level;

typedef enum wc_checkpoint_choice {
  WC_CHECKPOINT_SELECTED = 0, /* what the run's model_selection chose */
  WC_CHECKPOINT_BEST = 1,
  WC_CHECKPOINT_LAST = 2
} wc_checkpoint_choice;

typedef struct wc_dataset wc_dataset;
typedef struct wc_experiment wc_experiment;

typedef void (*wc_log_fn)(wc_log_level level, const char* message, void* user_data);

WC_API const char* wc_version(void);
/* Message of the last failed call on this thread; "" if none. */
WC_API const char* wc_last_error(void);
WC_API void wc_string_free(char* s);

/* NULL restores the default stderr sink. */
WC_API void wc_set_log_callback(wc_log_fn fn, void* user_data);
WC_API wc_status wc_set_log_level(wc_log_level level);

/* ---- datasets ---- */

WC_API wc_status wc_dataset_open(const char* root, wc_dataset** out);
/* spec_json: keys of the config's dataset.synthetic section; missing keys
 * take library defaults. NULL or "" means all defaults. */
WC_API wc_status wc_dataset_synthesize(const char* spec_json, wc_dataset** out);
WC_API wc_status wc_dataset_write(const wc_dataset* ds, const char* dir);
WC_API wc_status wc_dataset_size(const wc_dataset* ds, size_t* out);
WC_API wc_status wc_dataset_summary_json(const wc_dataset* ds, char** out);
WC_API void wc_dataset_free(wc_dataset* ds);

/* ---- experiments ---- */

/* overrides: n_overrides strings of the form "dotted.key=value". */
WC_API wc_status wc_experiment_from_file(const char* path, const char* const* overrides,
                                         size_t n_overrides, wc_experiment** out);
WC_API wc_status wc_experiment_from_json(const char* config_json, const char* const* overrides,
                                         size_t n_overrides, wc_experiment** out);
WC_API wc_status wc_experiment_config_json(const wc_experiment* exp, char** out);
WC_API wc_status wc_experiment_fingerprint(const wc_experiment* exp, char** out);
WC_API wc_status wc_experiment_prepare(const wc_experiment* exp, char** summary_json);
/* resume_run may be NULL. stop_after_steps <= 0 trains to completion. */
WC_API wc_status wc_experiment_train(const wc_experiment* exp, const char* resume_run,
                                     int64_t stop_after_steps, char** run_dir);
WC_API wc_status wc_experiment_latest_run(const wc_experiment* exp, char** run_dir);
WC_API void wc_experiment_free(wc_experiment* exp);

/* Config fingerprint recorded in a run directory. */
WC_API wc_status wc_run_fingerprint(const char* run_dir, char** out);
WC_API wc_status wc_run_evaluate(const char* run_dir, wc_checkpoint_choice choice,
                                 char** result_json);
WC_API wc_status wc_run_analyze(const char* run_dir, char** result_json);
/* Renders tables over the given run directories. With output_dir set the
 * report is also written to a new directory below it. */
WC_API wc_status wc_report(const char* const* run_dirs, size_t n_runs, const char* output_dir,
                           char** markdown);
/* Complete runs under <output_dir>/runs, as a JSON array of paths. */
WC_API wc_status wc_discover_runs(const char* output_dir, char** runs_json);

/* ---- helpers ---- */

/* slots[u] is -1 for an absent user or an activity index 0..8. */
WC_API wc_status wc_derive_counts(const int slots[6], int counts[9]);
WC_API wc_status wc_round_counts(const double predicted[9], int counts[9]);
WC_API wc_status wc_lr_at(int64_t step, int64_t total_steps, double warmup_fraction, double peak,
                          double* out);

#ifdef __cplusplus
}
#endif

#endif /* WICOUNT_WICOUNT_H_ */
