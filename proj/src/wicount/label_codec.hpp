// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "wicount/types.hpp"

namespace wicount {

/// Per-user-slot annotation. Slot u holds the activity of User u+1, or
/// nullopt when that user is absent from the scene.
struct SlotLabels {
  std::array<std::optional<Activity>, kUserSlots> slots{};

  std::size_t present_count() const;
  bool operator==(const SlotLabels&) const = default;
};

/// U x K one-hot matrix, column 0 = ABSENT, column a+1 = activity a.
using OneHotTargets = std::array<std::array<float, kClasses>, kUserSlots>;

using CountVector = std::array<int, kActivities>;
using CountPrediction = std::array<double, kActivities>;

/// Class index used by the identity-dependent head for one slot.
inline int class_index(const std::optional<Activity>& slot) {
  return slot ? static_cast<int>(*slot) + 1 : 0;
}

/// Returns a warning message when more than five slots are occupied
/// (the dataset never has six simultaneous users); nullopt otherwise.
std::optional<std::string> validate(const SlotLabels& labels);

OneHotTargets encode_identity_dependent(const SlotLabels& labels);

/// Inverse of encode_identity_dependent via per-row argmax.
SlotLabels decode_identity_dependent(const OneHotTargets& targets);

/// Slot labels from per-slot class indices (0 = ABSENT).
SlotLabels labels_from_classes(std::span<const int, kUserSlots> classes);

/// c_k = number of slots labelled with activity k.
CountVector derive_counts(const SlotLabels& labels);

/// Rounds half away from zero. Throws ContractViolation on a negative entry.
CountVector round_counts(const CountPrediction& predicted);

}  // namespace wicount
