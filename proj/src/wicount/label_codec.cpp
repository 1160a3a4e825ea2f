// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/label_codec.hpp"

#include <cmath>

#include "wicount/error.hpp"

namespace wicount {

std::size_t SlotLabels::present_count() const {
  std::size_t n = 0;
  for (const auto& s : slots) n += s.has_value() ? 1 : 0;
  return n;
}

std::optional<std::string> validate(const SlotLabels& labels) {
  const auto n = labels.present_count();
  if (n > kUserSlots - 1) {
    return "sample has " + std::to_string(n) + " active users; at most 5 are expected";
  }
  return std::nullopt;
}

OneHotTargets encode_identity_dependent(const SlotLabels& labels) {
  OneHotTargets out{};
  for (std::size_t u = 0; u < kUserSlots; ++u) {
    out[u][static_cast<std::size_t>(class_index(labels.slots[u]))] = 1.0F;
  }
  return out;
}

SlotLabels decode_identity_dependent(const OneHotTargets& targets) {
  std::array<int, kUserSlots> classes{};
  for (std::size_t u = 0; u < kUserSlots; ++u) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kClasses; ++k) {
      if (targets[u][k] > targets[u][best]) best = k;
    }
    classes[u] = static_cast<int>(best);
  }
  return labels_from_classes(classes);
}

SlotLabels labels_from_classes(std::span<const int, kUserSlots> classes) {
  SlotLabels out;
  for (std::size_t u = 0; u < kUserSlots; ++u) {
    const int c = classes[u];
    if (c < 0 || c >= static_cast<int>(kClasses)) {
      throw ContractViolation("class index " + std::to_string(c) + " outside [0, 10)");
    }
    if (c > 0) out.slots[u] = static_cast<Activity>(c - 1);
  }
  return out;
}

CountVector derive_counts(const SlotLabels& labels) {
  CountVector counts{};
  for (const auto& slot : labels.slots) {
    if (slot) ++counts[static_cast<std::size_t>(*slot)];
  }
  return counts;
}

CountVector round_counts(const CountPrediction& predicted) {
  CountVector out{};
  for (std::size_t k = 0; k < kActivities; ++k) {
    const double v = predicted[k];
    if (!(v >= 0.0)) {
      throw ContractViolation("round_counts: entry " + std::to_string(k) +
                              " is negative or NaN (" + std::to_string(v) + ")");
    }
    // std::round is half-away-from-zero.
    out[k] = static_cast<int>(std::round(v));
  }
  return out;
}

}  // namespace wicount
