// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/dataset.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "wicount/error.hpp"
#include "wicount/npy.hpp"

namespace wicount {
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const fs::path& file) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw IngestionError(file.string() + ": missing column '" + name + "'");
  }
};

CsvTable read_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IngestionError("cannot open " + file.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(file.string() + " is empty");
  t.header = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto row = split_csv_line(line);
    if (row.size() != t.header.size()) {
      throw IngestionError(file.string() + ":" + std::to_string(lineno) + ": expected " +
                           std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::optional<Activity> parse_slot(const std::string& value, const std::string& sample_id) {
  if (is_absent_token(value)) return std::nullopt;
  auto a = parse_activity(value);
  if (!a) {
    throw IngestionError("sample '" + sample_id + "': unknown activity '" + value + "'");
  }
  return a;
}

Band require_band(const std::string& v, const std::string& id) {
  auto b = parse_band(v);
  if (!b) throw IngestionError("sample '" + id + "': unknown band '" + v + "'");
  return *b;
}

Environment require_env(const std::string& v, const std::string& id) {
  auto e = parse_environment(v);
  if (!e) throw IngestionError("sample '" + id + "': unknown environment '" + v + "'");
  return *e;
}

DatasetManifest load_native(const fs::path& root) {
  const fs::path file = root / "manifest.csv";
  const CsvTable t = read_csv(file);
  const auto c_id = t.column("sample_id", file);
  const auto c_band = t.column("band", file);
  const auto c_env = t.column("environment", file);
  std::array<std::size_t, kUserSlots> c_user{};
  for (std::size_t u = 0; u < kUserSlots; ++u) {
    c_user[u] = t.column("user_" + std::to_string(u + 1), file);
  }
  DatasetManifest m;
  m.root = root;
  for (const auto& row : t.rows) {
    ManifestEntry e;
    e.sample_id = row[c_id];
    e.band = require_band(row[c_band], e.sample_id);
    e.environment = require_env(row[c_env], e.sample_id);
    for (std::size_t u = 0; u < kUserSlots; ++u) {
      e.labels.slots[u] = parse_slot(row[c_user[u]], e.sample_id);
    }
    e.array_path = root / "arrays" / (e.sample_id + ".npy");
    m.entries.push_back(std::move(e));
  }
  return m;
}

DatasetManifest load_public_release(const fs::path& root) {
  const fs::path file = root / "annotation.csv";
  const CsvTable t = read_csv(file);
  const auto c_id = t.column("label", file);
  const auto c_band = t.column("wifi_band", file);
  const auto c_env = t.column("environment", file);
  std::array<std::size_t, kUserSlots> c_user{};
  for (std::size_t u = 0; u < kUserSlots; ++u) {
    c_user[u] = t.column("user_" + std::to_string(u + 1) + "_activity", file);
  }
  DatasetManifest m;
  m.root = root;
  for (const auto& row : t.rows) {
    ManifestEntry e;
    e.sample_id = row[c_id];
    e.band = require_band(row[c_band], e.sample_id);
    e.environment = require_env(row[c_env], e.sample_id);
    for (std::size_t u = 0; u < kUserSlots; ++u) {
      e.labels.slots[u] = parse_slot(row[c_user[u]], e.sample_id);
    }
    e.array_path = root / "wifi_csi" / "amp" / (e.sample_id + ".npy");
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace

DatasetManifest::DatasetManifest() {
  for (std::size_t k = 0; k < kActivities; ++k) {
    activity_vocabulary[k] = std::string(kActivityVocabulary[k]);
  }
}

void DatasetManifest::reindex() {
  index_.clear();
  index_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!index_.emplace(entries[i].sample_id, i).second) {
      throw IngestionError("duplicate sample_id '" + entries[i].sample_id + "'");
    }
  }
}

const ManifestEntry& DatasetManifest::find(std::string_view sample_id) const {
  auto it = index_.find(std::string(sample_id));
  if (it == index_.end()) {
    throw ContractViolation("sample_id '" + std::string(sample_id) + "' not in manifest");
  }
  return entries[it->second];
}

bool DatasetManifest::contains(std::string_view sample_id) const {
  return index_.count(std::string(sample_id)) > 0;
}

DatasetManifest load_manifest(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw IngestionError("dataset root '" + root.string() + "' is not a directory");
  }
  DatasetManifest m;
  if (fs::exists(root / "manifest.csv")) {
    m = load_native(root);
  } else if (fs::exists(root / "annotation.csv")) {
    m = load_public_release(root);
  } else {
    throw IngestionError("dataset root '" + root.string() +
                         "' has neither manifest.csv nor annotation.csv");
  }
  m.reindex();
  for (const auto& e : m.entries) {
    if (!fs::exists(e.array_path)) {
      throw IngestionError("sample '" + e.sample_id + "': missing amplitude file " +
                           e.array_path.string());
    }
    if (auto w = validate(e.labels)) m.warnings.push_back(e.sample_id + ": " + *w);
  }
  return m;
}

void validate_sample(const CsiSample& s) {
  if (s.length == 0) throw IngestionError("sample '" + s.sample_id + "' has zero length");
  if (s.amplitude.size() != s.length * kChannels) {
    throw IngestionError("sample '" + s.sample_id + "': amplitude size mismatch");
  }
  std::size_t bad = 0;
  for (float v : s.amplitude) {
    if (!std::isfinite(v) || v < 0.0F) ++bad;
  }
  if (bad > 0) {
    throw IngestionError("sample '" + s.sample_id + "': " + std::to_string(bad) +
                         " non-finite or negative amplitude values");
  }
}

CsiSample load_sample(const DatasetManifest& manifest, std::string_view sample_id) {
  const ManifestEntry& e = manifest.find(sample_id);
  const npy::Array arr = npy::read(e.array_path);
  const auto& sh = arr.shape;
  if (sh.size() != 4 || sh[1] != kTx || sh[2] != kRx || sh[3] != kSubcarriers || sh[0] == 0) {
    std::string actual;
    for (std::size_t i = 0; i < sh.size(); ++i) actual += (i ? "x" : "") + std::to_string(sh[i]);
    throw IngestionError("sample '" + e.sample_id + "': shape mismatch, expected Tx3x3x30, got " +
                         actual);
  }
  CsiSample s;
  s.sample_id = e.sample_id;
  s.band = e.band;
  s.environment = e.environment;
  s.length = sh[0];
  s.amplitude = npy::to_amplitude(arr);
  s.annotation = e.labels;
  validate_sample(s);
  return s;
}

DatasetManifest write_dataset(const fs::path& dir, const DatasetManifest& manifest,
                              std::span<const CsiSample> samples) {
  fs::create_directories(dir / "arrays");
  std::ofstream csv(dir / "manifest.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (dir / "manifest.csv").string());
  csv << "sample_id,band,environment";
  for (std::size_t u = 0; u < kUserSlots; ++u) csv << ",user_" << u + 1;
  csv << "\n";
  std::unordered_map<std::string, const CsiSample*> by_id;
  for (const auto& s : samples) by_id[s.sample_id] = &s;
  for (const auto& e : manifest.entries) {
    auto it = by_id.find(e.sample_id);
    if (it == by_id.end()) throw ContractViolation("no sample data for '" + e.sample_id + "'");
    const CsiSample& s = *it->second;
    csv << e.sample_id << "," << to_string(e.band) << "," << to_string(e.environment);
    for (const auto& slot : e.labels.slots) {
      csv << "," << (slot ? to_string(*slot) : kAbsentToken);
    }
    csv << "\n";
    const std::array<std::size_t, 4> shape = {s.length, kTx, kRx, kSubcarriers};
    npy::write_f32(dir / "arrays" / (e.sample_id + ".npy"), shape, s.amplitude);
  }
  csv.close();
  if (!csv) throw IoError("write failed for manifest.csv");
  return load_manifest(dir);
}

Dataset Dataset::from_directory(const fs::path& root) {
  Dataset d;
  d.manifest_ = load_manifest(root);
  return d;
}

Dataset Dataset::from_memory(DatasetManifest manifest, std::vector<CsiSample> samples) {
  auto mem = std::make_shared<std::unordered_map<std::string, CsiSample>>();
  for (auto& s : samples) {
    validate_sample(s);
    std::string id = s.sample_id;
    mem->emplace(std::move(id), std::move(s));
  }
  manifest.reindex();
  for (const auto& e : manifest.entries) {
    if (!mem->count(e.sample_id)) {
      throw IngestionError("sample '" + e.sample_id + "' has no amplitude data");
    }
  }
  Dataset d;
  d.manifest_ = std::move(manifest);
  d.memory_ = std::move(mem);
  return d;
}

CsiSample Dataset::sample(std::string_view sample_id) const {
  if (memory_) {
    manifest_.find(sample_id);
    return memory_->at(std::string(sample_id));
  }
  return load_sample(manifest_, sample_id);
}

DatasetSummary summarize(const DatasetManifest& manifest) {
  DatasetSummary s;
  s.total = manifest.entries.size();
  for (const auto& e : manifest.entries) {
    ++s.by_environment[std::string(to_string(e.environment))];
    ++s.by_band[std::string(to_string(e.band))];
    ++s.by_user_count[e.labels.present_count()];
  }
  return s;
}

}  // namespace wicount
