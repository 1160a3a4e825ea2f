// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "wicount/dataset.hpp"

namespace wicount {

enum class UserAssignment {
  /// k active users occupy slots 1..k.
  first_slots,
  /// k active users are a uniformly random k-subset of the six users.
  random_users,
};

/// Where an activity instance's sinusoid lands among the 270 channels.
enum class ChannelLayout {
  /// A fresh random contiguous window per instance.
  scattered,
  /// Each user owns a fixed disjoint block of 45 channels.
  user_blocks,
  /// Each activity owns a fixed disjoint block of 30 channels; with user
  /// signatures enabled a user occupies its own 5-channel cell of the block.
  activity_blocks,
};

/// Parameters of the frequency-coded synthetic dataset. Each activity
/// instance adds a sinusoid at its activity's signature frequency to a subset
/// of the 270 channels; the count of an activity is therefore visible as
/// channel coverage at that frequency.
struct SyntheticSpec {
  std::size_t n_samples = 100;
  std::size_t t_length = 300;
  int user_count_min = 0;
  int user_count_max = 5;
  std::array<double, kActivities> signature_frequencies = {0.7, 1.3, 2.0, 2.7, 3.3,
                                                           4.0, 4.7, 5.3, 6.0};
  double noise_std = 0.05;
  std::uint64_t seed = 0;

  UserAssignment user_assignment = UserAssignment::first_slots;
  ChannelLayout channel_layout = ChannelLayout::scattered;
  /// Strength of per-user static channel signatures. With a positive value
  /// each user also owns a fixed channel subset and a personal tempo, which
  /// makes identities recoverable from the signal.
  double user_signature_strength = 0.0;
  std::size_t channels_per_activity = 45;
  double activity_amplitude = 1.0;
  double baseline_level = 3.0;
  double duration_seconds = 3.0;
  Band band = Band::ghz5;
};

/// Throws ConfigError when the spec is out of range.
void validate(const SyntheticSpec& spec);

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<CsiSample> samples;
};

/// Deterministic for a fixed spec: all randomness flows from `spec.seed`
/// through the portable Rng.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace wicount
