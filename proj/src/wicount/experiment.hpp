// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wicount/config.hpp"
#include "wicount/dataset.hpp"
#include "wicount/splits.hpp"

namespace wicount {

/// Ingests or synthesizes the configured dataset and applies the band and
/// environment filters.
Dataset load_experiment_dataset(const ExperimentConfig& cfg);

/// The protocol's split manifests, in a fixed order.
std::vector<SplitManifest> make_splits(const ExperimentConfig& cfg, const DatasetManifest& m);

/// Moves round(fraction * n) training ids (chosen by a seeded hash order)
/// into a validation list. Returns {train, validation}.
std::pair<std::vector<std::string>, std::vector<std::string>> carve_validation(
    const std::vector<std::string>& train_ids, double fraction, std::uint64_t seed);

/// Summary counts plus split sizes; split manifests and summary.json are
/// written under <output_dir>/prepared/<fingerprint>/.
nlohmann::json cmd_prepare(const ExperimentConfig& cfg);

struct TrainOptions {
  /// Continue an interrupted run directory instead of creating a new one.
  std::filesystem::path resume_run;
  /// Testing hook: stop every split after this many optimizer steps.
  std::optional<std::int64_t> stop_after_steps;
};

/// Trains one model per split into a new append-only run directory
/// <output_dir>/runs/<label>-<task>-<protocol>-<fp8>-<NNN>/ and returns it.
std::filesystem::path cmd_train(const ExperimentConfig& cfg, const TrainOptions& opts = {});

/// Most recent complete run of this config under output_dir; throws
/// IoError when none exists.
std::filesystem::path latest_run(const ExperimentConfig& cfg);

/// The configuration recorded in a run directory.
ExperimentConfig run_config(const std::filesystem::path& run_dir);

enum class CheckpointChoice { selected, best, last };

/// Re-evaluates every split from its persisted checkpoint and writes
/// evaluation.json (evaluation-2.json, ... when one exists).
nlohmann::json cmd_evaluate(const std::filesystem::path& run_dir,
                            CheckpointChoice choice = CheckpointChoice::selected);

/// Per-split identity-invariance analysis of the run's models; writes
/// invariance.json (numbered like evaluation files).
nlohmann::json cmd_analyze(const std::filesystem::path& run_dir);

}  // namespace wicount
