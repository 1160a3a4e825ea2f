// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace wicount {

struct RenderedReport {
  std::string markdown;
  /// Per-activity MAE and per-user-count curves.
  nlohmann::json series;
};

/// Pools the per-split records of the given run directories and renders the
/// comparison tables. Runs sharing label, task, protocol, band and
/// environment are pooled only when their configs agree up to seeds;
/// otherwise ConfigError is thrown. An empty list renders "no runs".
RenderedReport render_report(const std::vector<std::filesystem::path>& run_dirs);

/// Every run directory under <output_dir>/runs with a complete record.
std::vector<std::filesystem::path> discover_runs(const std::filesystem::path& output_dir);

/// Renders and writes report.md / series.json into a new
/// <output_dir>/reports/report-NNN/ directory; returns the markdown.
std::string cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                       const std::filesystem::path& output_dir);

}  // namespace wicount
