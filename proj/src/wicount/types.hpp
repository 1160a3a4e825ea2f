// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace wicount {

inline constexpr std::size_t kUserSlots = 6;
inline constexpr std::size_t kActivities = 9;
/// Identity-dependent class count: ABSENT plus the nine activities.
inline constexpr std::size_t kClasses = kActivities + 1;
inline constexpr std::size_t kTx = 3;
inline constexpr std::size_t kRx = 3;
inline constexpr std::size_t kSubcarriers = 30;
inline constexpr std::size_t kChannels = kTx * kRx * kSubcarriers;  // 270

enum class Activity : int {
  nothing = 0,
  walk,
  rotation,
  jump,
  wave,
  lie_down,
  pick_up,
  sit_down,
  stand_up,
};

/// Canonical vocabulary order; index i here is activity index i everywhere.
inline constexpr std::array<std::string_view, kActivities> kActivityVocabulary = {
    "nothing", "walk", "rotation", "jump", "wave",
    "lie_down", "pick_up", "sit_down", "stand_up"};

/// Canonical absent-user token written by this library.
inline constexpr std::string_view kAbsentToken = "null";

enum class Band { ghz2_4, ghz5 };
enum class Environment { classroom, meeting, empty };

inline constexpr std::array<Environment, 3> kAllEnvironments = {
    Environment::classroom, Environment::meeting, Environment::empty};

std::string_view to_string(Activity a);
std::string_view to_string(Band b);
std::string_view to_string(Environment e);

/// Accepts the vocabulary names plus a few spellings used by the public
/// release ("walking", ...). Returns nullopt for unknown strings.
std::optional<Activity> parse_activity(std::string_view s);
/// True for "null", "nan", "NaN", "none" and the empty string.
bool is_absent_token(std::string_view s);
std::optional<Band> parse_band(std::string_view s);
std::optional<Environment> parse_environment(std::string_view s);

}  // namespace wicount
