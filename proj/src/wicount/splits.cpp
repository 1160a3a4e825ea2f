// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "wicount/error.hpp"
#include "wicount/rng.hpp"

namespace wicount {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::standard: return "standard";
    case Protocol::loeo: return "loeo";
    case Protocol::luo: return "luo";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view s) {
  if (s == "standard") return Protocol::standard;
  if (s == "loeo") return Protocol::loeo;
  if (s == "luo") return Protocol::luo;
  return std::nullopt;
}

SplitManifest standard_split(const DatasetManifest& manifest, std::uint64_t seed,
                             double train_ratio) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw ConfigError("standard split: train_ratio must be in (0, 1)");
  }
  SplitManifest split;
  split.protocol = Protocol::standard;
  std::ostringstream desc;
  desc << "seed=" << seed << " ratio=" << train_ratio;
  split.descriptor = desc.str();

  std::map<std::pair<int, std::size_t>, std::vector<std::string>> strata;
  for (const auto& e : manifest.entries) {
    strata[{static_cast<int>(e.environment), e.labels.present_count()}].push_back(e.sample_id);
  }

  const double test_fraction = 1.0 - train_ratio;
  std::size_t eligible_total = 0;
  for (const auto& [key, ids] : strata) {
    if (ids.size() >= 2) eligible_total += ids.size();
  }
  const auto target_test = static_cast<std::size_t>(
      std::llround(static_cast<double>(manifest.entries.size()) * test_fraction));

  // Largest-remainder apportionment of the test budget over eligible strata.
  struct Alloc {
    std::pair<int, std::size_t> key;
    std::size_t quota;
    double remainder;
    std::size_t cap;
  };
  std::vector<Alloc> allocs;
  std::size_t assigned = 0;
  for (const auto& [key, ids] : strata) {
    if (ids.size() < 2) {
      split.warnings.push_back("stratum (" + std::string(to_string(kAllEnvironments[key.first])) +
                               ", " + std::to_string(key.second) + " users) has " +
                               std::to_string(ids.size()) + " sample(s); kept in train");
      continue;
    }
    const double exact = eligible_total == 0
                             ? 0.0
                             : static_cast<double>(target_test) * static_cast<double>(ids.size()) /
                                   static_cast<double>(eligible_total);
    const auto cap = ids.size() - 1;
    const auto quota = std::min(static_cast<std::size_t>(std::floor(exact)), cap);
    allocs.push_back({key, quota, exact - std::floor(exact), cap});
    assigned += quota;
  }
  std::vector<std::size_t> order(allocs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return allocs[a].remainder > allocs[b].remainder;
  });
  for (bool progress = true; assigned < target_test && progress;) {
    progress = false;
    for (std::size_t i : order) {
      if (assigned >= target_test) break;
      if (allocs[i].quota < allocs[i].cap) {
        ++allocs[i].quota;
        ++assigned;
        progress = true;
      }
    }
  }

  std::map<std::pair<int, std::size_t>, std::size_t> quota;
  for (const auto& a : allocs) quota[a.key] = a.quota;
  std::set<std::string> test;
  for (const auto& [key, ids] : strata) {
    auto it = quota.find(key);
    if (it == quota.end()) continue;
    std::vector<std::string> shuffled = ids;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(key.first) * 16 + key.second));
    rng.shuffle(shuffled.begin(), shuffled.end());
    for (std::size_t i = 0; i < it->second; ++i) test.insert(shuffled[i]);
  }
  for (const auto& e : manifest.entries) {
    (test.count(e.sample_id) ? split.test_ids : split.train_ids).push_back(e.sample_id);
  }
  return split;
}

std::vector<SplitManifest> loeo_splits(const DatasetManifest& manifest) {
  constexpr std::array<Environment, 3> held_out_order = {Environment::meeting,
                                                         Environment::classroom, Environment::empty};
  std::map<Environment, std::size_t> counts;
  for (const auto& e : manifest.entries) ++counts[e.environment];
  std::vector<SplitManifest> out;
  for (Environment held : held_out_order) {
    if (counts[held] == 0) {
      throw IngestionError("LOEO: environment '" + std::string(to_string(held)) +
                           "' has no samples");
    }
    SplitManifest s;
    s.protocol = Protocol::loeo;
    std::vector<std::string> train_envs;
    for (Environment e : {Environment::empty, Environment::meeting, Environment::classroom}) {
      if (e != held) {
        std::string name(to_string(e));
        name[0] = static_cast<char>(std::toupper(name[0]));
        train_envs.push_back(name);
      }
    }
    std::string test_name(to_string(held));
    test_name[0] = static_cast<char>(std::toupper(test_name[0]));
    s.descriptor = train_envs[0] + " + " + train_envs[1] + " / " + test_name;
    for (const auto& e : manifest.entries) {
      (e.environment == held ? s.test_ids : s.train_ids).push_back(e.sample_id);
    }
    out.push_back(std::move(s));
  }
  return out;
}

SplitManifest luo_split(const DatasetManifest& manifest, const UserCombo& combo) {
  auto check = [](int u) {
    if (u < 1 || u > static_cast<int>(kUserSlots)) {
      throw ContractViolation("LUO: user id " + std::to_string(u) + " outside 1..6");
    }
  };
  std::set<int> train_users, test_users;
  for (int u : combo.train) check(u), train_users.insert(u);
  for (int u : combo.test) check(u), test_users.insert(u);

  SplitManifest s;
  s.protocol = Protocol::luo;
  auto join = [](const std::array<int, 3>& g) {
    return std::to_string(g[0]) + "-" + std::to_string(g[1]) + "-" + std::to_string(g[2]);
  };
  s.descriptor = join(combo.train) + " / " + join(combo.test);

  std::vector<std::pair<std::uint64_t, std::string>> empty_scenes;
  std::set<std::string> to_train, to_test;
  for (const auto& e : manifest.entries) {
    bool any = false, all_train = true, all_test = true;
    for (std::size_t u = 0; u < kUserSlots; ++u) {
      if (!e.labels.slots[u]) continue;
      any = true;
      const int user = static_cast<int>(u) + 1;
      all_train = all_train && train_users.count(user) > 0;
      all_test = all_test && test_users.count(user) > 0;
    }
    if (!any) {
      empty_scenes.emplace_back(fnv1a(s.descriptor + "|" + e.sample_id), e.sample_id);
    } else if (all_train) {
      to_train.insert(e.sample_id);
    } else if (all_test) {
      to_test.insert(e.sample_id);
    } else {
      ++s.excluded;
    }
  }
  std::sort(empty_scenes.begin(), empty_scenes.end());
  const std::size_t half = (empty_scenes.size() + 1) / 2;
  for (std::size_t i = 0; i < empty_scenes.size(); ++i) {
    (i < half ? to_train : to_test).insert(empty_scenes[i].second);
  }
  for (const auto& e : manifest.entries) {
    if (to_train.count(e.sample_id)) s.train_ids.push_back(e.sample_id);
    if (to_test.count(e.sample_id)) s.test_ids.push_back(e.sample_id);
  }
  return s;
}

std::vector<SplitManifest> luo_splits(const DatasetManifest& manifest) {
  std::vector<SplitManifest> out;
  for (const auto& combo : kLuoCombos) out.push_back(luo_split(manifest, combo));
  return out;
}

void write_split(std::ostream& out, const SplitManifest& split, std::string_view comment) {
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "protocol " << to_string(split.protocol) << "\n";
  out << "descriptor " << split.descriptor << "\n";
  for (const auto& id : split.train_ids) out << "train " << id << "\n";
  for (const auto& id : split.test_ids) out << "test " << id << "\n";
}

void write_split(const std::filesystem::path& path, const SplitManifest& split,
                 std::string_view comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write split file " + path.string());
  write_split(out, split, comment);
}

SplitManifest read_split(std::istream& in) {
  SplitManifest s;
  std::string line;
  bool have_protocol = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string value = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "protocol") {
      auto p = parse_protocol(value);
      if (!p) throw IngestionError("split file: unknown protocol '" + value + "'");
      s.protocol = *p;
      have_protocol = true;
    } else if (key == "descriptor") {
      s.descriptor = value;
    } else if (key == "train") {
      s.train_ids.push_back(value);
    } else if (key == "test") {
      s.test_ids.push_back(value);
    } else {
      throw IngestionError("split file: unexpected line '" + line + "'");
    }
  }
  if (!have_protocol) throw IngestionError("split file: missing protocol line");
  return s;
}

SplitManifest read_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read split file " + path.string());
  return read_split(in);
}

std::set<int> users_in(const DatasetManifest& manifest, const std::vector<std::string>& ids) {
  std::set<int> users;
  for (const auto& id : ids) {
    const auto& e = manifest.find(id);
    for (std::size_t u = 0; u < kUserSlots; ++u) {
      if (e.labels.slots[u]) users.insert(static_cast<int>(u) + 1);
    }
  }
  return users;
}

}  // namespace wicount
