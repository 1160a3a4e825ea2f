// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "wicount/error.hpp"
#include "wicount/rng.hpp"

namespace wicount {
namespace {

// Stream ids for the derived per-dataset tables.
constexpr std::uint64_t kEnvStream = 1000;
constexpr std::uint64_t kUserChannelStream = 2000;
constexpr std::uint64_t kUserProfileStream = 3000;

std::vector<std::size_t> random_channels(Rng& rng, std::size_t count) {
  const auto start = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(kChannels - count)));
  std::vector<std::size_t> out(count);
  std::iota(out.begin(), out.end(), start);
  return out;
}

}  // namespace

void validate(const SyntheticSpec& spec) {
  if (spec.n_samples == 0) throw ConfigError("synthetic: n_samples must be positive");
  if (spec.t_length == 0) throw ConfigError("synthetic: t_length must be positive");
  if (spec.user_count_min < 0 || spec.user_count_max > 5 ||
      spec.user_count_min > spec.user_count_max) {
    throw ConfigError("synthetic: user_count_range must satisfy 0 <= min <= max <= 5");
  }
  for (double f : spec.signature_frequencies) {
    if (!(f > 0.0)) throw ConfigError("synthetic: signature frequencies must be positive");
  }
  if (!(spec.noise_std >= 0.0)) throw ConfigError("synthetic: noise_std must be >= 0");
  if (spec.channels_per_activity == 0 || spec.channels_per_activity > kChannels) {
    throw ConfigError("synthetic: channels_per_activity must be in [1, 270]");
  }
  if (!(spec.user_signature_strength >= 0.0)) {
    throw ConfigError("synthetic: user_signature_strength must be >= 0");
  }
  if (!(spec.duration_seconds > 0.0)) throw ConfigError("synthetic: duration must be positive");
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const bool signatures = spec.user_signature_strength > 0.0;

  // Per-environment static multipath profile.
  std::array<std::array<float, kChannels>, 3> env_profile{};
  for (std::size_t e = 0; e < 3; ++e) {
    Rng r(mix_seed(spec.seed, kEnvStream + e));
    for (auto& v : env_profile[e]) v = static_cast<float>(spec.baseline_level * (1.0 + 0.1 * r.normal()));
  }
  // Fixed channel blocks: a seeded permutation of six user blocks (45
  // channels) and of nine activity blocks (30 channels).
  constexpr std::size_t kUserBlock = kChannels / kUserSlots;
  constexpr std::size_t kActivityBlock = kChannels / kActivities;
  constexpr std::size_t kCell = kActivityBlock / kUserSlots;
  std::array<std::size_t, kUserSlots> user_block{};
  std::array<std::size_t, kActivities> activity_block{};
  {
    Rng rb(mix_seed(spec.seed, kUserChannelStream));
    std::iota(user_block.begin(), user_block.end(), std::size_t{0});
    rb.shuffle(user_block.begin(), user_block.end());
    std::iota(activity_block.begin(), activity_block.end(), std::size_t{0});
    rb.shuffle(activity_block.begin(), activity_block.end());
  }
  auto instance_channels = [&](Rng& rng, std::size_t user, std::size_t activity) {
    std::vector<std::size_t> out;
    switch (spec.channel_layout) {
      case ChannelLayout::scattered:
        return random_channels(rng, spec.channels_per_activity);
      case ChannelLayout::user_blocks:
        for (std::size_t j = 0; j < std::min(spec.channels_per_activity, kUserBlock); ++j) {
          out.push_back(user_block[user] * kUserBlock + j);
        }
        break;
      case ChannelLayout::activity_blocks: {
        const std::size_t start = activity_block[activity] * kActivityBlock;
        if (signatures) {
          for (std::size_t j = 0; j < kCell; ++j) out.push_back(start + user * kCell + j);
        } else {
          for (std::size_t j = 0; j < kActivityBlock; ++j) out.push_back(start + j);
        }
        break;
      }
    }
    return out;
  };
  // Per-user static profile and tempo.
  std::array<std::array<float, kChannels>, kUserSlots> user_profile{};
  std::array<double, kUserSlots> user_tempo{};
  for (std::size_t u = 0; u < kUserSlots; ++u) {
    Rng rp(mix_seed(spec.seed, kUserProfileStream + u));
    for (auto& v : user_profile[u]) v = static_cast<float>(spec.user_signature_strength * rp.normal());
    user_tempo[u] = 1.0 + 0.08 * (static_cast<double>(u) - 2.5) / 2.5;
  }

  SyntheticDataset out;
  out.samples.reserve(spec.n_samples);
  Rng rng(spec.seed);
  const double dt = spec.duration_seconds / static_cast<double>(spec.t_length);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    CsiSample s;
    char id[32];
    std::snprintf(id, sizeof(id), "syn_%06zu", i);
    s.sample_id = id;
    s.band = spec.band;
    s.environment = kAllEnvironments[static_cast<std::size_t>(rng.uniform_int(0, 2))];
    const auto k = static_cast<std::size_t>(rng.uniform_int(spec.user_count_min, spec.user_count_max));

    std::array<std::size_t, kUserSlots> users{0, 1, 2, 3, 4, 5};
    if (spec.user_assignment == UserAssignment::random_users) {
      // Partial Fisher-Yates for the first k positions.
      for (std::size_t j = 0; j < k; ++j) {
        const auto pick = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(j), 5));
        std::swap(users[j], users[pick]);
      }
    }
    for (std::size_t j = 0; j < k; ++j) {
      s.annotation.slots[users[j]] = static_cast<Activity>(rng.uniform_int(0, kActivities - 1));
    }

    s.length = spec.t_length;
    s.amplitude.resize(spec.t_length * kChannels);
    const auto& base = env_profile[static_cast<std::size_t>(s.environment)];
    for (std::size_t t = 0; t < spec.t_length; ++t) {
      std::copy(base.begin(), base.end(), s.amplitude.begin() + static_cast<std::ptrdiff_t>(t * kChannels));
    }

    for (std::size_t u = 0; u < kUserSlots; ++u) {
      const auto& slot = s.annotation.slots[u];
      if (!slot) continue;
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const auto activity = static_cast<std::size_t>(*slot);
      const std::vector<std::size_t> channels = instance_channels(rng, u, activity);
      double freq = spec.signature_frequencies[activity];
      if (signatures) freq *= user_tempo[u];
      const double w = 2.0 * std::numbers::pi * freq;
      for (std::size_t t = 0; t < spec.t_length; ++t) {
        const auto v = static_cast<float>(spec.activity_amplitude *
                                          std::sin(w * static_cast<double>(t) * dt + phase));
        float* row = s.amplitude.data() + t * kChannels;
        for (std::size_t c : channels) row[c] += v;
        if (signatures) {
          for (std::size_t c = 0; c < kChannels; ++c) row[c] += user_profile[u][c];
        }
      }
    }

    for (auto& v : s.amplitude) {
      if (spec.noise_std > 0.0) v += static_cast<float>(spec.noise_std * rng.normal());
      v = std::max(v, 0.0F);
    }

    ManifestEntry e;
    e.sample_id = s.sample_id;
    e.band = s.band;
    e.environment = s.environment;
    e.labels = s.annotation;
    out.manifest.entries.push_back(std::move(e));
    out.samples.push_back(std::move(s));
  }
  out.manifest.reindex();
  return out;
}

}  // namespace wicount
