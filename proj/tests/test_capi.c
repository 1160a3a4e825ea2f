/*
 * Copyright 2026 The wicount Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Exercises the C interface from plain C.
 * Usage: test_capi <smoke config> <scratch dir>
 */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "wicount/wicount.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

#define EXPECT_OK(call)                                                            \
  do {                                                                             \
    wc_status st_ = (call);                                                        \
    if (st_ != WC_OK) {                                                            \
      fprintf(stderr, "%s:%d: %s -> %d (%s)\n", __FILE__, __LINE__, #call, (int)st_, \
              wc_last_error());                                                    \
      ++failures;                                                                  \
    }                                                                              \
  } while (0)

static int log_lines = 0;
static void count_log(wc_log_level level, const char* msg, void* user) {
  (void)level;
  (void)msg;
  *(int*)user += 1;
}

static void helpers(void) {
  int slots[6] = {0, 0, 8, -1, 3, -1};
  int counts[9];
  EXPECT_OK(wc_derive_counts(slots, counts));
  EXPECT(counts[0] == 2 && counts[8] == 1 && counts[3] == 1 && counts[1] == 0);

  slots[1] = 9;
  EXPECT(wc_derive_counts(slots, counts) == WC_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(wc_last_error()) > 0);
  EXPECT(wc_derive_counts(NULL, counts) == WC_ERR_INVALID_ARGUMENT);

  double pred[9] = {0.5, 1.49, 2.5, 0.0, 0.49, 3.2, 0.0, 0.0, 0.0};
  EXPECT_OK(wc_round_counts(pred, counts));
  EXPECT(counts[0] == 1 && counts[1] == 1 && counts[2] == 3 && counts[4] == 0 && counts[5] == 3);
  pred[3] = -0.1;
  EXPECT(wc_round_counts(pred, counts) == WC_ERR_CONTRACT);

  double lr = 0;
  EXPECT_OK(wc_lr_at(0, 100, 0.1, 1e-3, &lr));
  EXPECT(fabs(lr - 1e-4) < 1e-15);
  EXPECT_OK(wc_lr_at(10, 100, 0.1, 1e-3, &lr));
  EXPECT(fabs(lr - 1e-3) < 1e-15);
  EXPECT(wc_lr_at(5, 0, 0.1, 1e-3, &lr) != WC_OK);
  EXPECT(wc_version()[0] != '\0');
}

static void datasets(const char* scratch) {
  wc_dataset* ds = NULL;
  EXPECT_OK(wc_dataset_synthesize("{\"n_samples\": 12, \"t_length\": 40, \"seed\": 3}", &ds));
  size_t n = 0;
  EXPECT_OK(wc_dataset_size(ds, &n));
  EXPECT(n == 12);
  char* summary = NULL;
  EXPECT_OK(wc_dataset_summary_json(ds, &summary));
  EXPECT(summary && strstr(summary, "\"total\":12") != NULL);
  wc_string_free(summary);

  char dir[1024];
  snprintf(dir, sizeof dir, "%s/dataset", scratch);
  EXPECT_OK(wc_dataset_write(ds, dir));
  wc_dataset_free(ds);

  wc_dataset* back = NULL;
  EXPECT_OK(wc_dataset_open(dir, &back));
  EXPECT_OK(wc_dataset_size(back, &n));
  EXPECT(n == 12);
  wc_dataset_free(back);

  back = NULL;
  EXPECT(wc_dataset_open("/nonexistent/wicount", &back) == WC_ERR_INGESTION);
  EXPECT(back == NULL);
  EXPECT(wc_dataset_synthesize("{\"bogus\": 1}", &back) == WC_ERR_CONFIG);
  EXPECT(wc_dataset_synthesize("{not json", &back) != WC_OK);
  wc_dataset_free(NULL);
}

static void experiment(const char* config, const char* scratch) {
  char out_set[1200];
  snprintf(out_set, sizeof out_set, "output_dir=%s/exp", scratch);
  const char* sets[] = {out_set,
                        "dataset.synthetic.n_samples=30",
                        "dataset.synthetic.t_length=60",
                        "transform.target_length=60",
                        "transform.resolution=32",
                        "train.epochs=1"};
  wc_experiment* exp = NULL;
  EXPECT_OK(wc_experiment_from_file(config, sets, 6, &exp));
  if (!exp) return;

  char* fp = NULL;
  EXPECT_OK(wc_experiment_fingerprint(exp, &fp));
  EXPECT(fp && strlen(fp) == 16);

  char* cfg_json = NULL;
  EXPECT_OK(wc_experiment_config_json(exp, &cfg_json));
  wc_experiment* same = NULL;
  EXPECT_OK(wc_experiment_from_json(cfg_json, NULL, 0, &same));
  char* fp2 = NULL;
  EXPECT_OK(wc_experiment_fingerprint(same, &fp2));
  EXPECT(fp && fp2 && strcmp(fp, fp2) == 0);
  wc_string_free(fp2);
  wc_string_free(cfg_json);
  wc_experiment_free(same);

  char* latest = NULL;
  EXPECT(wc_experiment_latest_run(exp, &latest) != WC_OK);

  char* summary = NULL;
  EXPECT_OK(wc_experiment_prepare(exp, &summary));
  wc_string_free(summary);

  /* Interrupt after two steps, then resume to completion. */
  char* run = NULL;
  EXPECT_OK(wc_experiment_train(exp, NULL, 2, &run));
  char* resumed = NULL;
  EXPECT_OK(wc_experiment_train(exp, run, 0, &resumed));
  EXPECT(run && resumed && strcmp(run, resumed) == 0);
  EXPECT_OK(wc_experiment_latest_run(exp, &latest));
  EXPECT(latest && resumed && strcmp(latest, resumed) == 0);

  char* run_fp = NULL;
  EXPECT_OK(wc_run_fingerprint(resumed, &run_fp));
  EXPECT(run_fp && fp && strcmp(run_fp, fp) == 0);
  wc_string_free(run_fp);

  char* result = NULL;
  EXPECT_OK(wc_run_evaluate(resumed, WC_CHECKPOINT_LAST, &result));
  EXPECT(result && strstr(result, "\"mae\"") != NULL);
  wc_string_free(result);
  result = NULL;
  EXPECT_OK(wc_run_analyze(resumed, &result));
  EXPECT(result && strstr(result, "\"users\"") != NULL);
  wc_string_free(result);

  char out_dir[1200];
  snprintf(out_dir, sizeof out_dir, "%s/exp", scratch);
  char* runs = NULL;
  EXPECT_OK(wc_discover_runs(out_dir, &runs));
  EXPECT(runs && resumed && strstr(runs, resumed) != NULL);
  wc_string_free(runs);

  const char* dirs[] = {resumed};
  char* md = NULL;
  EXPECT_OK(wc_report(dirs, 1, NULL, &md));
  EXPECT(md && strstr(md, "MAE") != NULL);
  wc_string_free(md);

  EXPECT(wc_run_evaluate("/nonexistent/run", WC_CHECKPOINT_LAST, &result) != WC_OK);
  EXPECT(wc_experiment_train(NULL, NULL, 0, &run) == WC_ERR_INVALID_ARGUMENT);

  wc_string_free(run);
  wc_string_free(resumed);
  wc_string_free(latest);
  wc_string_free(fp);
  wc_experiment_free(exp);

  const char* bad[] = {"train.epochs=0"};
  exp = NULL;
  EXPECT(wc_experiment_from_file(config, bad, 1, &exp) == WC_ERR_CONFIG);
  EXPECT(exp == NULL);
}

int main(int argc, char** argv) {
  if (argc != 3) {
    fprintf(stderr, "usage: %s <config> <scratch dir>\n", argv[0]);
    return 2;
  }
  wc_set_log_callback(count_log, &log_lines);
  EXPECT_OK(wc_set_log_level(WC_LOG_INFO));
  helpers();
  datasets(argv[2]);
  experiment(argv[1], argv[2]);
  EXPECT(log_lines > 0);
  wc_set_log_callback(NULL, NULL);

  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
