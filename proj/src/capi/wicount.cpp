// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/wicount.h"

#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "wicount/config.hpp"
#include "wicount/dataset.hpp"
#include "wicount/error.hpp"
#include "wicount/experiment.hpp"
#include "wicount/label_codec.hpp"
#include "wicount/log.hpp"
#include "wicount/lr_schedule.hpp"
#include "wicount/records.hpp"
#include "wicount/report.hpp"
#include "wicount/synthetic.hpp"

struct wc_dataset {
  wicount::Dataset data;
};

struct wc_experiment {
  wicount::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

wc_status fail(wc_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

/// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
wc_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return WC_OK;
  } catch (const wicount::IngestionError& e) {
    return fail(WC_ERR_INGESTION, e.what());
  } catch (const wicount::ContractViolation& e) {
    return fail(WC_ERR_CONTRACT, e.what());
  } catch (const wicount::ConfigError& e) {
    return fail(WC_ERR_CONFIG, e.what());
  } catch (const wicount::NumericError& e) {
    return fail(WC_ERR_NUMERIC, e.what());
  } catch (const wicount::CheckpointError& e) {
    return fail(WC_ERR_CHECKPOINT, e.what());
  } catch (const wicount::IoError& e) {
    return fail(WC_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(WC_ERR_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(WC_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(WC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(WC_ERR_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define WC_REQUIRE(cond, what)                                      \
  do {                                                              \
    if (!(cond)) return fail(WC_ERR_INVALID_ARGUMENT, what);        \
  } while (0)

std::vector<std::string> to_vector(const char* const* items, size_t n) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) {
    if (items[i] == nullptr) throw wicount::ConfigError("null override string");
    out.emplace_back(items[i]);
  }
  return out;
}

wc_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

}  // namespace

extern "C" {

const char* wc_version(void) { return "0.1.0"; }

const char* wc_last_error(void) { return g_last_error.c_str(); }

void wc_string_free(char* s) { std::free(s); }

void wc_set_log_callback(wc_log_fn fn, void* user_data) {
  g_log_fn = fn;
  g_log_user = user_data;
  if (fn == nullptr) {
    wicount::set_log_sink(nullptr);
    return;
  }
  wicount::set_log_sink([](wicount::LogLevel level, std::string_view msg) {
    const std::string s(msg);
    if (g_log_fn != nullptr) g_log_fn(static_cast<wc_log_level>(level), s.c_str(), g_log_user);
  });
}

wc_status wc_set_log_level(wc_log_level level) {
  WC_REQUIRE(level >= WC_LOG_DEBUG && level <= WC_LOG_ERROR, "invalid log level");
  wicount::set_log_level(static_cast<wicount::LogLevel>(level));
  return WC_OK;
}

wc_status wc_dataset_open(const char* root, wc_dataset** out) {
  WC_REQUIRE(root != nullptr && out != nullptr, "root and out must not be NULL");
  *out = nullptr;
  return guarded([&] { *out = new wc_dataset{wicount::Dataset::from_directory(root)}; });
}

wc_status wc_dataset_synthesize(const char* spec_json, wc_dataset** out) {
  WC_REQUIRE(out != nullptr, "out must not be NULL");
  *out = nullptr;
  return guarded([&] {
    nlohmann::json spec = wicount::to_json(wicount::SyntheticSpec{});
    if (spec_json != nullptr && *spec_json != '\0') {
      const auto patch = nlohmann::json::parse(spec_json);
      if (!patch.is_object()) throw wicount::ConfigError("synthetic spec must be a JSON object");
      for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (!spec.contains(it.key())) throw wicount::ConfigError("unknown synthetic key " + it.key());
        spec[it.key()] = it.value();
      }
    }
    const auto s = wicount::synthetic_spec_from_json(spec);
    auto syn = wicount::generate_synthetic(s);
    *out = new wc_dataset{
        wicount::Dataset::from_memory(std::move(syn.manifest), std::move(syn.samples))};
  });
}

wc_status wc_dataset_write(const wc_dataset* ds, const char* dir) {
  WC_REQUIRE(ds != nullptr && dir != nullptr, "dataset and dir must not be NULL");
  return guarded([&] {
    std::vector<wicount::CsiSample> samples;
    for (const auto& e : ds->data.manifest().entries) samples.push_back(ds->data.sample(e.sample_id));
    wicount::write_dataset(dir, ds->data.manifest(), samples);
  });
}

wc_status wc_dataset_size(const wc_dataset* ds, size_t* out) {
  WC_REQUIRE(ds != nullptr && out != nullptr, "dataset and out must not be NULL");
  *out = ds->data.size();
  return WC_OK;
}

wc_status wc_dataset_summary_json(const wc_dataset* ds, char** out) {
  WC_REQUIRE(ds != nullptr && out != nullptr, "dataset and out must not be NULL");
  return guarded([&] {
    auto j = wicount::to_json(wicount::summarize(ds->data.manifest()));
    j["warnings"] = ds->data.manifest().warnings;
    *out = dup(j.dump());
  });
}

void wc_dataset_free(wc_dataset* ds) { delete ds; }

wc_status wc_experiment_from_file(const char* path, const char* const* overrides, size_t n,
                                  wc_experiment** out) {
  WC_REQUIRE(path != nullptr && out != nullptr, "path and out must not be NULL");
  WC_REQUIRE(n == 0 || overrides != nullptr, "overrides must not be NULL");
  *out = nullptr;
  return guarded([&] {
    *out = new wc_experiment{wicount::load_config(path, to_vector(overrides, n))};
  });
}

wc_status wc_experiment_from_json(const char* config_json, const char* const* overrides, size_t n,
                                  wc_experiment** out) {
  WC_REQUIRE(config_json != nullptr && out != nullptr, "config and out must not be NULL");
  WC_REQUIRE(n == 0 || overrides != nullptr, "overrides must not be NULL");
  *out = nullptr;
  return guarded([&] {
    auto j = nlohmann::json::parse(config_json);
    j = wicount::apply_overrides(std::move(j), to_vector(overrides, n));
    *out = new wc_experiment{wicount::config_from_json(j)};
  });
}

wc_status wc_experiment_config_json(const wc_experiment* exp, char** out) {
  WC_REQUIRE(exp != nullptr && out != nullptr, "experiment and out must not be NULL");
  return guarded([&] { *out = dup(wicount::to_json(exp->cfg).dump(2)); });
}

wc_status wc_experiment_fingerprint(const wc_experiment* exp, char** out) {
  WC_REQUIRE(exp != nullptr && out != nullptr, "experiment and out must not be NULL");
  return guarded([&] { *out = dup(exp->cfg.fingerprint()); });
}

wc_status wc_experiment_prepare(const wc_experiment* exp, char** summary_json) {
  WC_REQUIRE(exp != nullptr && summary_json != nullptr, "experiment and out must not be NULL");
  return guarded([&] { *summary_json = dup(wicount::cmd_prepare(exp->cfg).dump(2)); });
}

wc_status wc_experiment_train(const wc_experiment* exp, const char* resume_run,
                              int64_t stop_after_steps, char** run_dir) {
  WC_REQUIRE(exp != nullptr && run_dir != nullptr, "experiment and out must not be NULL");
  return guarded([&] {
    wicount::TrainOptions opts;
    if (resume_run != nullptr && *resume_run != '\0') opts.resume_run = resume_run;
    if (stop_after_steps > 0) opts.stop_after_steps = stop_after_steps;
    *run_dir = dup(wicount::cmd_train(exp->cfg, opts).string());
  });
}

wc_status wc_experiment_latest_run(const wc_experiment* exp, char** run_dir) {
  WC_REQUIRE(exp != nullptr && run_dir != nullptr, "experiment and out must not be NULL");
  return guarded([&] { *run_dir = dup(wicount::latest_run(exp->cfg).string()); });
}

void wc_experiment_free(wc_experiment* exp) { delete exp; }

wc_status wc_run_fingerprint(const char* run_dir, char** out) {
  WC_REQUIRE(run_dir != nullptr && out != nullptr, "run_dir and out must not be NULL");
  return guarded([&] { *out = dup(wicount::run_config(run_dir).fingerprint()); });
}

wc_status wc_run_evaluate(const char* run_dir, wc_checkpoint_choice choice, char** result_json) {
  WC_REQUIRE(run_dir != nullptr && result_json != nullptr, "run_dir and out must not be NULL");
  WC_REQUIRE(choice >= WC_CHECKPOINT_SELECTED && choice <= WC_CHECKPOINT_LAST,
             "invalid checkpoint choice");
  return guarded([&] {
    const auto c = static_cast<wicount::CheckpointChoice>(choice);
    *result_json = dup(wicount::cmd_evaluate(run_dir, c).dump(2));
  });
}

wc_status wc_run_analyze(const char* run_dir, char** result_json) {
  WC_REQUIRE(run_dir != nullptr && result_json != nullptr, "run_dir and out must not be NULL");
  return guarded([&] { *result_json = dup(wicount::cmd_analyze(run_dir).dump(2)); });
}

wc_status wc_report(const char* const* run_dirs, size_t n_runs, const char* output_dir,
                    char** markdown) {
  WC_REQUIRE(markdown != nullptr, "out must not be NULL");
  WC_REQUIRE(n_runs == 0 || run_dirs != nullptr, "run_dirs must not be NULL");
  return guarded([&] {
    std::vector<std::filesystem::path> runs;
    for (size_t i = 0; i < n_runs; ++i) {
      if (run_dirs[i] == nullptr) throw wicount::ContractViolation("null run directory");
      runs.emplace_back(run_dirs[i]);
    }
    if (output_dir != nullptr && *output_dir != '\0') {
      *markdown = dup(wicount::cmd_report(runs, output_dir));
    } else {
      *markdown = dup(wicount::render_report(runs).markdown);
    }
  });
}

wc_status wc_discover_runs(const char* output_dir, char** runs_json) {
  WC_REQUIRE(output_dir != nullptr && runs_json != nullptr, "output_dir and out must not be NULL");
  return guarded([&] {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& p : wicount::discover_runs(output_dir)) j.push_back(p.string());
    *runs_json = dup(j.dump());
  });
}

wc_status wc_derive_counts(const int slots[6], int counts[9]) {
  WC_REQUIRE(slots != nullptr && counts != nullptr, "arrays must not be NULL");
  for (int u = 0; u < 6; ++u) {
    WC_REQUIRE(slots[u] >= -1 && slots[u] < 9, "slot value must be -1 or 0..8");
  }
  std::array<int, wicount::kUserSlots> classes{};
  for (int u = 0; u < 6; ++u) classes[u] = slots[u] + 1;  // class 0 is ABSENT
  return guarded([&] {
    const auto c = wicount::derive_counts(wicount::labels_from_classes(classes));
    std::copy(c.begin(), c.end(), counts);
  });
}

wc_status wc_round_counts(const double predicted[9], int counts[9]) {
  WC_REQUIRE(predicted != nullptr && counts != nullptr, "arrays must not be NULL");
  return guarded([&] {
    wicount::CountPrediction p{};
    std::copy(predicted, predicted + 9, p.begin());
    const auto c = wicount::round_counts(p);
    std::copy(c.begin(), c.end(), counts);
  });
}

wc_status wc_lr_at(int64_t step, int64_t total_steps, double warmup_fraction, double peak,
                   double* out) {
  WC_REQUIRE(out != nullptr, "out must not be NULL");
  return guarded([&] {
    *out = wicount::lr_at(step, wicount::LrSchedule::make(total_steps, warmup_fraction, peak));
  });
}

}  // extern "C"
