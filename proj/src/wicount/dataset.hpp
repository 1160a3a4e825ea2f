// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wicount/label_codec.hpp"
#include "wicount/types.hpp"

namespace wicount {

/// One 3-second amplitude recording. `amplitude` is row-major
/// [t][tx][rx][subcarrier], i.e. `length` rows of 270 values.
struct CsiSample {
  std::string sample_id;
  Band band = Band::ghz5;
  Environment environment = Environment::classroom;
  std::size_t length = 0;
  std::vector<float> amplitude;
  SlotLabels annotation;

  float at(std::size_t t, std::size_t tx, std::size_t rx, std::size_t sc) const {
    return amplitude[((t * kTx + tx) * kRx + rx) * kSubcarriers + sc];
  }
};

struct ManifestEntry {
  std::string sample_id;
  Band band = Band::ghz5;
  Environment environment = Environment::classroom;
  /// Empty for in-memory (synthetic) datasets.
  std::filesystem::path array_path;
  SlotLabels labels;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
  std::array<std::string, kActivities> activity_vocabulary{};
  /// Non-fatal findings collected during ingestion.
  std::vector<std::string> warnings;

  DatasetManifest();
  const ManifestEntry& find(std::string_view sample_id) const;
  bool contains(std::string_view sample_id) const;
  /// Rebuilds the id index; call after mutating `entries`. Throws
  /// IngestionError on duplicate ids.
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads a dataset directory. Two layouts are recognised:
///  - native: `manifest.csv` (sample_id, band, environment, user_1..user_6)
///    with arrays at `arrays/<sample_id>.npy`;
///  - public release: `annotation.csv` (label, environment, wifi_band,
///    user_N_activity ...) with arrays at `wifi_csi/amp/<label>.npy`.
DatasetManifest load_manifest(const std::filesystem::path& root);

/// Loads and validates one sample's amplitude (complex data is converted to
/// magnitude here).
CsiSample load_sample(const DatasetManifest& manifest, std::string_view sample_id);

/// Validates shape and finiteness of a sample in place; throws IngestionError.
void validate_sample(const CsiSample& sample);

/// Writes the native layout. Returns the manifest of the written copy.
DatasetManifest write_dataset(const std::filesystem::path& dir, const DatasetManifest& manifest,
                              std::span<const CsiSample> samples);

/// Manifest plus sample access; samples are either held in memory or read
/// from disk on demand. Read-only after construction.
class Dataset {
 public:
  static Dataset from_directory(const std::filesystem::path& root);
  static Dataset from_memory(DatasetManifest manifest, std::vector<CsiSample> samples);

  const DatasetManifest& manifest() const { return manifest_; }
  std::size_t size() const { return manifest_.entries.size(); }
  CsiSample sample(std::string_view sample_id) const;

  /// Copy restricted to entries matching the predicate.
  template <typename Pred>
  Dataset filtered(Pred keep) const {
    Dataset out;
    out.manifest_ = manifest_;
    out.manifest_.entries.clear();
    for (const auto& e : manifest_.entries) {
      if (keep(e)) out.manifest_.entries.push_back(e);
    }
    out.manifest_.reindex();
    out.memory_ = memory_;
    return out;
  }

 private:
  DatasetManifest manifest_;
  std::shared_ptr<const std::unordered_map<std::string, CsiSample>> memory_;
};

/// Counts by environment, band and active-user count, for summaries.
struct DatasetSummary {
  std::size_t total = 0;
  std::map<std::string, std::size_t> by_environment;
  std::map<std::string, std::size_t> by_band;
  std::map<std::size_t, std::size_t> by_user_count;
};

DatasetSummary summarize(const DatasetManifest& manifest);

}  // namespace wicount
