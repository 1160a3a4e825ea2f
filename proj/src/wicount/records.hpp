// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "wicount/dataset.hpp"
#include "wicount/metrics.hpp"
#include "wicount/trainer.hpp"

namespace wicount {

nlohmann::json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const InvarianceReport& r);
nlohmann::json to_json(const TrainingLog& log);
nlohmann::json to_json(const DatasetSummary& s);
nlohmann::json to_json(const std::map<std::string, MeanSd>& agg);

/// Reads a JSON file; throws IoError on failure.
nlohmann::json read_json(const std::filesystem::path& path);
/// Writes through a temporary file and rename.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace wicount
