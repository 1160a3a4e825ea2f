// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace wicount {

// std::mt19937_64 is bit-specified by the standard, but the std::*_distribution
// adaptors are not. Every draw that must be reproducible across platforms goes
// through the helpers below instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] (inclusive), rejection-sampled so there is
  /// no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via Box-Muller; the spare value is cached.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates using uniform_int.
  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::int64_t>(last - first);
    for (std::int64_t i = n - 1; i > 0; --i) {
      const auto j = uniform_int(0, i);
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finaliser; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace wicount
