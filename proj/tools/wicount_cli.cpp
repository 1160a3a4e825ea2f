// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end over the C API:
//   wicount prepare|train|evaluate|analyze|report --config PATH [--set key=value]...

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "wicount/wicount.h"

namespace {

struct Freer {
  void operator()(char* s) const { wc_string_free(s); }
  void operator()(wc_experiment* e) const { wc_experiment_free(e); }
};
using OwnedString = std::unique_ptr<char, Freer>;
using OwnedExperiment = std::unique_ptr<wc_experiment, Freer>;

/// Thrown to leave main() with the library's status as exit code.
struct Failure {
  wc_status status;
};

void check(wc_status s, const char* what) {
  if (s != WC_OK) {
    std::cerr << "wicount: " << what << " failed: " << wc_last_error() << "\n";
    throw Failure{s};
  }
}

OwnedString take(char* s) { return OwnedString(s); }

struct Common {
  std::string config;
  std::vector<std::string> overrides;
};

OwnedExperiment open_experiment(const Common& c) {
  std::vector<const char*> ov;
  for (const auto& o : c.overrides) ov.push_back(o.c_str());
  wc_experiment* e = nullptr;
  check(wc_experiment_from_file(c.config.c_str(), ov.data(), ov.size(), &e), "loading config");
  return OwnedExperiment(e);
}

/// --run when given (checked against the config), else the latest run.
std::string resolve_run(const wc_experiment* exp, const std::string& run) {
  char* fp = nullptr;
  check(wc_experiment_fingerprint(exp, &fp), "fingerprinting config");
  auto want = take(fp);
  if (run.empty()) {
    char* latest = nullptr;
    check(wc_experiment_latest_run(exp, &latest), "finding the latest run");
    return take(latest).get();
  }
  char* have = nullptr;
  check(wc_run_fingerprint(run.c_str(), &have), "reading the run record");
  auto owned = take(have);
  if (std::string(owned.get()) != want.get()) {
    std::cerr << "wicount: run " << run << " was produced by config " << owned.get()
              << ", but --config resolves to " << want.get() << "\n";
    throw Failure{WC_ERR_CONFIG};
  }
  return run;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override a config value, e.g. train.epochs=5");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-user WiFi CSI activity recognition and counting experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(wc_version()));
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  Common prep_c, train_c, eval_c, anal_c, rep_c;
  std::string resume, eval_run, anal_run, checkpoint = "selected";
  std::int64_t stop_after = 0;
  std::vector<std::string> report_runs;
  bool no_write = false;

  auto* prepare = app.add_subcommand("prepare", "Ingest or synthesize the dataset and write split manifests");
  add_common(prepare, prep_c);

  auto* train = app.add_subcommand("train", "Train one model per split into a new run directory");
  add_common(train, train_c);
  train->add_option("--resume", resume, "Continue an interrupted run directory")->check(CLI::ExistingDirectory);
  train->add_option("--stop-after-steps", stop_after, "Stop each split after N optimizer steps")
      ->group("");  // testing aid, hidden from --help

  auto* evaluate = app.add_subcommand("evaluate", "Re-evaluate a run from its checkpoints");
  add_common(evaluate, eval_c);
  evaluate->add_option("--run", eval_run, "Run directory (default: latest run of the config)");
  evaluate->add_option("--checkpoint", checkpoint, "selected, best or last")
      ->check(CLI::IsMember({"selected", "best", "last"}));

  auto* analyze = app.add_subcommand("analyze", "Identity-invariance analysis of a run's features");
  add_common(analyze, anal_c);
  analyze->add_option("--run", anal_run, "Run directory (default: latest run of the config)");

  auto* report = app.add_subcommand("report", "Render result tables over run directories");
  add_common(report, rep_c);
  report->add_option("--run", report_runs, "Run directory (repeatable; default: all runs)");
  report->add_flag("--no-write", no_write, "Print only; do not write a report directory");

  CLI11_PARSE(app, argc, argv);

  if (verbose) wc_set_log_level(WC_LOG_DEBUG);
  if (quiet) wc_set_log_level(WC_LOG_WARN);

  try {
    if (prepare->parsed()) {
      auto exp = open_experiment(prep_c);
      char* out = nullptr;
      check(wc_experiment_prepare(exp.get(), &out), "prepare");
      std::cout << take(out).get() << "\n";
    } else if (train->parsed()) {
      auto exp = open_experiment(train_c);
      char* out = nullptr;
      check(wc_experiment_train(exp.get(), resume.empty() ? nullptr : resume.c_str(), stop_after, &out),
            "train");
      std::cout << take(out).get() << "\n";
    } else if (evaluate->parsed()) {
      auto exp = open_experiment(eval_c);
      const std::string run = resolve_run(exp.get(), eval_run);
      const wc_checkpoint_choice choice = checkpoint == "best"   ? WC_CHECKPOINT_BEST
                                          : checkpoint == "last" ? WC_CHECKPOINT_LAST
                                                                 : WC_CHECKPOINT_SELECTED;
      char* out = nullptr;
      check(wc_run_evaluate(run.c_str(), choice, &out), "evaluate");
      std::cout << take(out).get() << "\n";
    } else if (analyze->parsed()) {
      auto exp = open_experiment(anal_c);
      const std::string run = resolve_run(exp.get(), anal_run);
      char* out = nullptr;
      check(wc_run_analyze(run.c_str(), &out), "analyze");
      std::cout << take(out).get() << "\n";
    } else if (report->parsed()) {
      auto exp = open_experiment(rep_c);
      char* cfg_json = nullptr;
      check(wc_experiment_config_json(exp.get(), &cfg_json), "reading config");
      const auto cfg = nlohmann::json::parse(take(cfg_json).get());
      const std::string output_dir = cfg.at("output_dir").get<std::string>();
      std::vector<std::string> runs = report_runs;
      if (runs.empty()) {
        char* listed = nullptr;
        check(wc_discover_runs(output_dir.c_str(), &listed), "listing runs");
        runs = nlohmann::json::parse(take(listed).get()).get<std::vector<std::string>>();
      }
      std::vector<const char*> ptrs;
      for (const auto& r : runs) ptrs.push_back(r.c_str());
      char* md = nullptr;
      check(wc_report(ptrs.data(), ptrs.size(), no_write ? nullptr : output_dir.c_str(), &md),
            "report");
      std::cout << take(md).get();
    }
  } catch (const Failure& f) {
    return static_cast<int>(f.status);
  }
  return 0;
}
