// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wicount/metrics.hpp"
#include "wicount/model.hpp"
#include "wicount/splits.hpp"
#include "wicount/synthetic.hpp"
#include "wicount/trainer.hpp"
#include "wicount/transform.hpp"

namespace wicount {

enum class DataSource { directory, synthetic };
enum class InvarianceSamples { test, all };

struct DatasetConfig {
  DataSource source = DataSource::synthetic;
  /// Empty means "take WICOUNT_DATA_ROOT from the environment".
  std::string root;
  std::optional<Band> band;                // nullopt = all bands
  std::optional<Environment> environment;  // nullopt = all environments
  SyntheticSpec synthetic;
};

struct ProtocolConfig {
  Protocol kind = Protocol::standard;
  /// One standard split per seed; ignored by LOEO/LUO.
  std::vector<std::uint64_t> seeds{0, 1, 2};
  double train_ratio = 0.8;
};

struct EvaluationConfig {
  bool macro_include_absent = true;
  R2Mode r2_mode = R2Mode::flattened;
  InvarianceSamples invariance_samples = InvarianceSamples::test;
};

struct RuntimeConfig {
  int threads = 0;  // 0 = library default
  bool cache_eval_images = true;
};

struct ExperimentConfig {
  /// Free-form row name used by the report tables.
  std::string label;
  DatasetConfig dataset;
  Task task = Task::identity_agnostic;
  ModelSpec model;
  TransformConfig transform;
  TrainConfig train;
  ProtocolConfig protocol;
  EvaluationConfig evaluation;
  std::filesystem::path output_dir;
  RuntimeConfig runtime;

  /// 16 hex digits over everything that influences results (label,
  /// output_dir and runtime excluded).
  std::string fingerprint() const;
  /// Same, additionally ignoring the split and training seeds, so repeated
  /// runs with different seeds can be pooled.
  std::string group_fingerprint() const;
};

/// Every key is required and unknown keys are rejected; errors name the key.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// `overrides` are "dotted.key=value" strings; the value is parsed as JSON
/// and falls back to a plain string.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});
nlohmann::json apply_overrides(nlohmann::json j, const std::vector<std::string>& overrides);

/// The "dataset.synthetic" section on its own (all keys required).
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticSpec& s);

/// Dataset root after the environment-variable fallback. Throws ConfigError
/// when neither is set.
std::filesystem::path resolve_data_root(const DatasetConfig& d);

}  // namespace wicount
