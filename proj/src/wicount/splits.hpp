// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "wicount/dataset.hpp"

namespace wicount {

enum class Protocol { standard, loeo, luo };

std::string_view to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view s);

struct SplitManifest {
  Protocol protocol = Protocol::standard;
  /// "seed=<n> ratio=<r>", "<train envs> / <test env>" or "1-2-3 / 4-5-6".
  std::string descriptor;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  /// Ids excluded from both sides (mixed-group LUO samples).
  std::size_t excluded = 0;
  std::vector<std::string> warnings;

  bool operator==(const SplitManifest& o) const {
    return protocol == o.protocol && descriptor == o.descriptor && train_ids == o.train_ids &&
           test_ids == o.test_ids;
  }
};

/// Random split stratified by (environment, active-user count). Exactly
/// round(n * (1 - train_ratio)) samples go to test, apportioned across strata
/// by largest remainder; strata with fewer than two samples stay in train.
SplitManifest standard_split(const DatasetManifest& manifest, std::uint64_t seed,
                             double train_ratio = 0.8);

/// One split per held-out environment in the order meeting, classroom, empty.
std::vector<SplitManifest> loeo_splits(const DatasetManifest& manifest);

/// User partitions (1-based user ids).
struct UserCombo {
  std::array<int, 3> train;
  std::array<int, 3> test;
};

inline constexpr std::array<UserCombo, 3> kLuoCombos = {{
    {{1, 2, 3}, {4, 5, 6}},
    {{1, 2, 4}, {3, 5, 6}},
    {{1, 2, 5}, {3, 4, 6}},
}};

/// Samples whose users all lie in the train group go to train, all in the
/// test group to test, mixed samples are dropped; zero-user samples are split
/// in half by a hash of their id.
SplitManifest luo_split(const DatasetManifest& manifest, const UserCombo& combo);
std::vector<SplitManifest> luo_splits(const DatasetManifest& manifest);

/// Line-oriented text: "protocol <p>", "descriptor <d>", then "train <id>" /
/// "test <id>" lines.
void write_split(std::ostream& out, const SplitManifest& split, std::string_view comment = {});
void write_split(const std::filesystem::path& path, const SplitManifest& split,
                 std::string_view comment = {});
SplitManifest read_split(std::istream& in);
SplitManifest read_split(const std::filesystem::path& path);

/// Users (1-based) present in any of the given samples.
std::set<int> users_in(const DatasetManifest& manifest, const std::vector<std::string>& ids);

}  // namespace wicount
