// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "wicount/error.hpp"
#include "wicount/log.hpp"
#include "wicount/records.hpp"
#include "wicount/rng.hpp"
#include "wicount/synthetic.hpp"
#include "wicount/trainer.hpp"

namespace wicount {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kRunFormat = "wicount-run-1";

void apply_runtime(const ExperimentConfig& cfg) {
  if (cfg.runtime.threads > 0) torch::set_num_threads(cfg.runtime.threads);
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    out += std::isalnum(u) || c == '_' || c == '.' ? c : '_';
  }
  return out.empty() ? "run" : out;
}

/// `base`.json, then `base`-2.json, `base`-3.json, ...
fs::path next_numbered(const fs::path& dir, const std::string& base) {
  fs::path p = dir / (base + ".json");
  for (int i = 2; fs::exists(p); ++i) p = dir / (base + "-" + std::to_string(i) + ".json");
  return p;
}

fs::path split_dir(const fs::path& run, std::size_t i) {
  return run / ("split_" + std::to_string(i));
}

}  // namespace

Dataset load_experiment_dataset(const ExperimentConfig& cfg) {
  Dataset data;
  if (cfg.dataset.source == DataSource::synthetic) {
    auto syn = generate_synthetic(cfg.dataset.synthetic);
    data = Dataset::from_memory(std::move(syn.manifest), std::move(syn.samples));
  } else {
    data = Dataset::from_directory(resolve_data_root(cfg.dataset));
  }
  const auto band = cfg.dataset.band;
  const auto env = cfg.dataset.environment;
  if (band || env) {
    data = data.filtered([&](const ManifestEntry& e) {
      return (!band || e.band == *band) && (!env || e.environment == *env);
    });
  }
  if (data.size() == 0) throw IngestionError("no samples left after the band/environment filter");
  return data;
}

std::vector<SplitManifest> make_splits(const ExperimentConfig& cfg, const DatasetManifest& m) {
  switch (cfg.protocol.kind) {
    case Protocol::standard: {
      std::vector<SplitManifest> out;
      for (auto seed : cfg.protocol.seeds) out.push_back(standard_split(m, seed, cfg.protocol.train_ratio));
      return out;
    }
    case Protocol::loeo:
      if (cfg.dataset.environment) {
        throw ConfigError("the loeo protocol needs dataset.environment = \"all\"");
      }
      return loeo_splits(m);
    case Protocol::luo:
      return luo_splits(m);
  }
  throw ContractViolation("unknown protocol");
}

std::pair<std::vector<std::string>, std::vector<std::string>> carve_validation(
    const std::vector<std::string>& train_ids, double fraction, std::uint64_t seed) {
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train_ids.size())));
  if (n_val == 0) return {train_ids, {}};
  if (n_val >= train_ids.size()) throw ConfigError("validation_fraction leaves no training samples");
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  for (std::size_t i = 0; i < train_ids.size(); ++i) keyed.emplace_back(fnv1a(train_ids[i], seed), i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<bool> is_val(train_ids.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[keyed[i].second] = true;
  std::vector<std::string> train, val;
  for (std::size_t i = 0; i < train_ids.size(); ++i) {
    (is_val[i] ? val : train).push_back(train_ids[i]);
  }
  return {train, val};
}

json cmd_prepare(const ExperimentConfig& cfg) {
  const Dataset data = load_experiment_dataset(cfg);
  const auto splits = make_splits(cfg, data.manifest());
  const fs::path dir = cfg.output_dir / "prepared" / cfg.fingerprint();
  fs::create_directories(dir);

  json split_list = json::array();
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const fs::path file = dir / ("split_" + std::to_string(i) + ".txt");
    write_split(file, splits[i], "config " + cfg.fingerprint());
    split_list.push_back({{"descriptor", splits[i].descriptor},
                          {"train", splits[i].train_ids.size()},
                          {"test", splits[i].test_ids.size()},
                          {"excluded", splits[i].excluded},
                          {"warnings", splits[i].warnings},
                          {"file", file.string()}});
  }
  json j = {{"config_fingerprint", cfg.fingerprint()},
            {"summary", to_json(summarize(data.manifest()))},
            {"warnings", data.manifest().warnings},
            {"splits", split_list}};
  write_json(dir / "summary.json", j);
  return j;
}

ExperimentConfig run_config(const fs::path& run_dir) {
  const json rec = read_json(run_dir / "run_record.json");
  if (rec.value("format", "") != kRunFormat) {
    throw IoError(run_dir.string() + " does not hold a run record");
  }
  return config_from_json(rec.at("config"));
}

fs::path cmd_train(const ExperimentConfig& cfg, const TrainOptions& opts) {
  apply_runtime(cfg);
  const std::string fp = cfg.fingerprint();

  // Fail on missing pretrained weights before touching the data.
  if (cfg.model.pretrained && !fs::exists(cfg.model.weights_path)) {
    throw CheckpointError("pretrained weights requested but not found at '" +
                          cfg.model.weights_path.string() + "'");
  }

  const Dataset data = load_experiment_dataset(cfg);
  const auto splits = make_splits(cfg, data.manifest());

  fs::path run;
  json record;
  if (!opts.resume_run.empty()) {
    run = opts.resume_run;
    record = read_json(run / "run_record.json");
    if (record.at("config_fingerprint") != fp) {
      throw CheckpointError("run " + run.string() + " was produced by config " +
                            record.at("config_fingerprint").get<std::string>() + ", not " + fp);
    }
  } else {
    const std::string prefix = slug(cfg.label) + "-" + std::string(to_string(cfg.task)) + "-" +
                               std::string(to_string(cfg.protocol.kind)) + "-" + fp.substr(0, 8);
    fs::create_directories(cfg.output_dir / "runs");
    for (int i = 1;; ++i) {
      char num[16];
      std::snprintf(num, sizeof num, "%03d", i);
      run = cfg.output_dir / "runs" / (prefix + "-" + num);
      if (fs::create_directory(run)) break;  // false when it already exists
    }
    record = {{"format", kRunFormat},
              {"label", cfg.label},
              {"task", to_string(cfg.task)},
              {"protocol", to_string(cfg.protocol.kind)},
              {"config_fingerprint", fp},
              {"group_fingerprint", cfg.group_fingerprint()},
              {"config", to_json(cfg)},
              {"complete", false},
              {"splits", json::array()}};
    write_json(run / "run_record.json", record);
  }
  log_info("run directory " + run.string());

  ImageCache cache;
  ImageCache* cache_ptr = cfg.runtime.cache_eval_images ? &cache : nullptr;
  const EvalOptions eval_opts{cfg.evaluation.macro_include_absent, cfg.evaluation.r2_mode};
  std::vector<MetricReport> reports;

  for (std::size_t i = 0; i < splits.size(); ++i) {
    const auto& split = splits[i];
    const fs::path sdir = split_dir(run, i);
    if (i < record["splits"].size() && record["splits"][i].contains("metrics")) {
      reports.push_back(metric_report_from_json(record["splits"][i]["metrics"]));
      continue;  // finished before the interruption
    }
    fs::create_directories(sdir);
    write_split(sdir / "split.txt", split, "config " + fp);
    if (split.train_ids.empty() || split.test_ids.empty()) {
      throw ContractViolation("split '" + split.descriptor + "' has an empty side");
    }
    for (const auto& w : split.warnings) log_warn(split.descriptor + ": " + w);

    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(cfg.train.seed, i);
    auto [train_ids, val_ids] = carve_validation(split.train_ids, tc.validation_fraction, tc.seed);

    ModelSpec ms = cfg.model;
    ms.task = cfg.task;
    CsiNet model = build_model(ms);

    FitOptions fo;
    fo.checkpoint_dir = sdir;
    fo.config_fingerprint = fp;
    fo.cache = cache_ptr;
    fo.stop_after_steps = opts.stop_after_steps;
    if (!opts.resume_run.empty() && fs::exists(sdir / "checkpoint_last.pt")) {
      fo.resume_from = sdir / "checkpoint_last.pt";
    }
    log_info("split " + std::to_string(i) + " (" + split.descriptor + "): " +
             std::to_string(train_ids.size()) + " train, " + std::to_string(val_ids.size()) +
             " validation, " + std::to_string(split.test_ids.size()) + " test");
    const TrainingLog tlog = fit(model, data, train_ids, val_ids, tc, cfg.transform, fo);
    write_json(next_numbered(sdir, "training_log"),
               json{{"config_fingerprint", fp}, {"log", to_json(tlog)}});

    const std::int64_t done_steps = tlog.steps.empty() ? 0 : tlog.steps.back().step + 1;
    json entry = {{"index", i},
                  {"descriptor", split.descriptor},
                  {"train", train_ids.size()},
                  {"validation", val_ids.size()},
                  {"test", split.test_ids.size()},
                  {"checkpoint_best", "checkpoint_best.pt"},
                  {"checkpoint_last", "checkpoint_last.pt"},
                  {"selected", cfg.train.model_selection == ModelSelection::best ? "best" : "last"},
                  {"best_epoch", tlog.best_epoch ? json(*tlog.best_epoch) : json(nullptr)},
                  {"steps", tlog.total_steps}};
    if (i < record["splits"].size()) {
      record["splits"][i] = entry;
    } else {
      record["splits"].push_back(entry);
    }
    if (opts.stop_after_steps && done_steps < tlog.total_steps) {
      write_json(run / "run_record.json", record);
      log_info("stopped early at step " + std::to_string(done_steps));
      return run;
    }
    MetricReport rep = evaluate(model, data, split.test_ids, cfg.transform, eval_opts, cache_ptr);
    rep.split_descriptor = split.descriptor;
    record["splits"][i]["metrics"] = to_json(rep);
    reports.push_back(rep);
    write_json(run / "run_record.json", record);
  }

  record["aggregate"] = to_json(aggregate(reports));
  record["complete"] = true;
  write_json(run / "run_record.json", record);
  return run;
}

fs::path latest_run(const ExperimentConfig& cfg) {
  const fs::path runs = cfg.output_dir / "runs";
  const std::string fp = cfg.fingerprint();
  std::vector<fs::path> matches;
  if (fs::exists(runs)) {
    for (const auto& d : fs::directory_iterator(runs)) {
      const fs::path rec = d.path() / "run_record.json";
      if (!fs::exists(rec)) continue;
      const json j = read_json(rec);
      if (j.value("config_fingerprint", "") == fp && j.value("complete", false)) {
        matches.push_back(d.path());
      }
    }
  }
  if (matches.empty()) {
    throw IoError("no complete run for config " + fp + " under " + runs.string());
  }
  std::sort(matches.begin(), matches.end());
  return matches.back();
}

namespace {

struct LoadedSplit {
  SplitManifest split;
  CsiNet model{nullptr};
};

LoadedSplit load_split_model(const ExperimentConfig& cfg, const fs::path& run, std::size_t i,
                             const json& entry, CheckpointChoice choice) {
  const fs::path sdir = split_dir(run, i);
  LoadedSplit ls;
  ls.split = read_split(sdir / "split.txt");
  std::string which = entry.at("selected").get<std::string>();
  if (choice == CheckpointChoice::best) which = "best";
  if (choice == CheckpointChoice::last) which = "last";
  const fs::path ckpt = sdir / entry.at("checkpoint_" + which).get<std::string>();
  if (!fs::exists(ckpt)) throw CheckpointError("missing checkpoint " + ckpt.string());
  ModelSpec ms = cfg.model;
  ms.task = cfg.task;
  ms.pretrained = false;  // weights come from the checkpoint
  ls.model = CsiNet(ms);
  load_checkpoint(ckpt, ls.model, nullptr, cfg.fingerprint());
  ls.model->eval();
  return ls;
}

}  // namespace

json cmd_evaluate(const fs::path& run, CheckpointChoice choice) {
  const json record = read_json(run / "run_record.json");
  const ExperimentConfig cfg = run_config(run);
  apply_runtime(cfg);
  const Dataset data = load_experiment_dataset(cfg);
  const EvalOptions eval_opts{cfg.evaluation.macro_include_absent, cfg.evaluation.r2_mode};
  ImageCache cache;

  std::vector<MetricReport> reports;
  json splits = json::array();
  const auto& entries = record.at("splits");
  if (entries.empty()) throw CheckpointError("run " + run.string() + " has no trained splits");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto ls = load_split_model(cfg, run, i, entries[i], choice);
    MetricReport rep = evaluate(ls.model, data, ls.split.test_ids, cfg.transform, eval_opts,
                                cfg.runtime.cache_eval_images ? &cache : nullptr);
    rep.split_descriptor = ls.split.descriptor;
    splits.push_back(to_json(rep));
    reports.push_back(std::move(rep));
  }
  const char* choice_name = choice == CheckpointChoice::selected ? "selected"
                            : choice == CheckpointChoice::best   ? "best"
                                                                 : "last";
  json j = {{"config_fingerprint", cfg.fingerprint()},
            {"task", to_string(cfg.task)},
            {"protocol", to_string(cfg.protocol.kind)},
            {"checkpoint", choice_name},
            {"splits", splits},
            {"aggregate", to_json(aggregate(reports))}};
  write_json(next_numbered(run, "evaluation"), j);
  return j;
}

json cmd_analyze(const fs::path& run) {
  const json record = read_json(run / "run_record.json");
  const ExperimentConfig cfg = run_config(run);
  apply_runtime(cfg);
  const Dataset data = load_experiment_dataset(cfg);
  ImageCache cache;

  json splits = json::array();
  const auto& entries = record.at("splits");
  if (entries.empty()) throw CheckpointError("run " + run.string() + " has no trained splits");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto ls = load_split_model(cfg, run, i, entries[i], CheckpointChoice::selected);
    std::vector<std::string> ids = ls.split.test_ids;
    if (cfg.evaluation.invariance_samples == InvarianceSamples::all) {
      ids.clear();
      for (const auto& e : data.manifest().entries) ids.push_back(e.sample_id);
    }
    const auto p = predict(ls.model, data, ids, cfg.transform, 32, true,
                           cfg.runtime.cache_eval_images ? &cache : nullptr);
    const auto inv = identity_invariance(p.embeddings, p.truths);
    json s = to_json(inv);
    s["split"] = ls.split.descriptor;
    s["samples"] = ids.size();
    splits.push_back(s);
  }
  json j = {{"config_fingerprint", cfg.fingerprint()},
            {"task", to_string(cfg.task)},
            {"protocol", to_string(cfg.protocol.kind)},
            {"splits", splits}};
  write_json(next_numbered(run, "invariance"), j);
  return j;
}

}  // namespace wicount
